// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_HARNESS_HISTORY_HPP
#define VERSIONTREE_HARNESS_HISTORY_HPP

/// \file
/// Operation histories: the invoke/respond event stream concurrent runs
/// record, its JSONL serialization, and well-formedness checks. Event
/// timestamps are recorder sequence numbers (a single global counter), so
/// real-time order is exactly index order.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../key.hpp"

namespace versiontree::harness {

enum class OpCode { contains, add, remove, range };

inline const char* op_name(OpCode op) {
  switch (op) {
    case OpCode::contains: return "contains";
    case OpCode::add: return "add";
    case OpCode::remove: return "remove";
    case OpCode::range: return "range";
  }
  return "?";
}

inline std::optional<OpCode> parse_op(const std::string& name) {
  if (name == "contains") return OpCode::contains;
  if (name == "add") return OpCode::add;
  if (name == "remove") return OpCode::remove;
  if (name == "range") return OpCode::range;
  return std::nullopt;
}

/// Result of one operation: a boolean for contains/add/remove, a sorted key
/// list for range.
struct OpResult {
  enum class Type { boolean, keys } type = Type::boolean;
  bool b = false;
  std::vector<Key> keys;

  static OpResult of(bool v) { return OpResult{Type::boolean, v, {}}; }
  static OpResult of(std::vector<Key> v) { return OpResult{Type::keys, false, std::move(v)}; }

  friend bool operator==(const OpResult& x, const OpResult& y) {
    if (x.type != y.type) return false;
    return x.type == Type::boolean ? x.b == y.b : x.keys == y.keys;
  }
};

struct HistoryEvent {
  enum class Kind { invoke, respond };
  Kind kind = Kind::invoke;
  int thread = 0;
  OpCode op = OpCode::contains;
  std::vector<Key> args;
  std::optional<OpResult> result;  // respond events only
  std::uint64_t index = 0;

  friend bool operator==(const HistoryEvent&, const HistoryEvent&) = default;
};

using History = std::vector<HistoryEvent>;

/// Canonical one-line serialization. Field order and spacing are fixed so a
/// write -> read -> write round trip is bit-exact.
inline std::string to_jsonl_line(const HistoryEvent& e) {
  std::ostringstream os;
  os << "{\"kind\":\"" << (e.kind == HistoryEvent::Kind::invoke ? "invoke" : "respond")
     << "\",\"thread\":" << e.thread << ",\"op\":\"" << op_name(e.op) << "\",\"args\":[";
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    if (i) os << ",";
    os << e.args[i];
  }
  os << "]";
  if (e.result.has_value()) {
    os << ",\"result\":";
    if (e.result->type == OpResult::Type::boolean) {
      os << (e.result->b ? "true" : "false");
    } else {
      os << "[";
      for (std::size_t i = 0; i < e.result->keys.size(); ++i) {
        if (i) os << ",";
        os << e.result->keys[i];
      }
      os << "]";
    }
  }
  os << ",\"index\":" << e.index << "}";
  return os.str();
}

inline void write_history(std::ostream& os, const History& h) {
  for (const HistoryEvent& e : h) os << to_jsonl_line(e) << "\n";
}

inline HistoryEvent event_from_json(const nlohmann::json& j) {
  HistoryEvent e;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "invoke")
    e.kind = HistoryEvent::Kind::invoke;
  else if (kind == "respond")
    e.kind = HistoryEvent::Kind::respond;
  else
    throw std::invalid_argument("history event has unknown kind: " + kind);
  e.thread = j.at("thread").get<int>();
  auto op = parse_op(j.at("op").get<std::string>());
  if (!op) throw std::invalid_argument("history event has unknown op");
  e.op = *op;
  e.args = j.at("args").get<std::vector<Key>>();
  if (j.contains("result")) {
    const auto& r = j.at("result");
    if (r.is_boolean())
      e.result = OpResult::of(r.get<bool>());
    else if (r.is_array())
      e.result = OpResult::of(r.get<std::vector<Key>>());
    else
      throw std::invalid_argument("history result is neither boolean nor key list");
  }
  e.index = j.at("index").get<std::uint64_t>();
  return e;
}

inline History parse_history(std::istream& is) {
  History h;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw std::invalid_argument("history line " + std::to_string(lineno) +
                                  " is not valid JSON");
    h.push_back(event_from_json(j));
  }
  return h;
}

/// Checks the per-thread alternation discipline: events ordered by index,
/// unique indices, every respond matching the thread's single outstanding
/// invoke (same op and args), responses carrying results and invokes none.
/// Returns problem descriptions, empty when well-formed.
inline std::vector<std::string> history_issues(const History& h) {
  std::vector<std::string> issues;
  std::uint64_t last_index = 0;
  bool first = true;
  struct Outstanding {
    bool open = false;
    OpCode op = OpCode::contains;
    std::vector<Key> args;
  };
  std::vector<Outstanding> per_thread;
  for (const HistoryEvent& e : h) {
    if (!first && e.index <= last_index)
      issues.push_back("event index " + std::to_string(e.index) + " out of order");
    first = false;
    last_index = e.index;
    if (e.thread < 0) {
      issues.push_back("negative thread id");
      continue;
    }
    if (per_thread.size() <= static_cast<std::size_t>(e.thread))
      per_thread.resize(static_cast<std::size_t>(e.thread) + 1);
    Outstanding& o = per_thread[static_cast<std::size_t>(e.thread)];
    if (e.kind == HistoryEvent::Kind::invoke) {
      if (o.open)
        issues.push_back("thread " + std::to_string(e.thread) +
                         " invoked while an operation was outstanding");
      if (e.result.has_value()) issues.push_back("invoke event carries a result");
      o = Outstanding{true, e.op, e.args};
    } else {
      if (!o.open || o.op != e.op || o.args != e.args)
        issues.push_back("thread " + std::to_string(e.thread) +
                         " responded without a matching invoke");
      if (!e.result.has_value()) issues.push_back("respond event lacks a result");
      o.open = false;
    }
  }
  return issues;
}

/// Global stamp source for history events. fetch-add per event; merging
/// per-thread buffers and sorting by index restores real-time order.
class HistoryRecorder {
 public:
  std::uint64_t stamp() noexcept { return next_.fetch_add(1); }

  static History merge(std::vector<History> per_thread) {
    History all;
    for (History& h : per_thread)
      all.insert(all.end(), h.begin(), h.end());
    std::sort(all.begin(), all.end(),
              [](const HistoryEvent& a, const HistoryEvent& b) { return a.index < b.index; });
    return all;
  }

 private:
  std::atomic<std::uint64_t> next_{0};
};

}  // namespace versiontree::harness

#endif  // VERSIONTREE_HARNESS_HISTORY_HPP
