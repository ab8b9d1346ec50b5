// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_HARNESS_LINCHECK_HPP
#define VERSIONTREE_HARNESS_LINCHECK_HPP

/// \file
/// Linearizability checking by exhaustive search: find a total order of the
/// completed operations (plus, optionally, pending updates) that respects
/// real-time order and replays exactly on the sequential sorted-set oracle.
/// Sound and complete up to an explicit search budget; running out of
/// budget yields an "inconclusive" verdict, never a wrong one.

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "history.hpp"
#include "oracle.hpp"

namespace versiontree::harness {

enum class Verdict { linearizable, not_linearizable, inconclusive };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::linearizable: return "linearizable";
    case Verdict::not_linearizable: return "not-linearizable";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct LincheckOptions {
  std::uint64_t max_expansions = 5'000'000;
  std::size_t max_memo_entries = 4'000'000;
  bool find_minimal_prefix = true;
};

struct LincheckResult {
  Verdict verdict = Verdict::inconclusive;
  /// Invoke-event indices in linearization order (set when linearizable).
  std::vector<std::uint64_t> witness;
  /// Event count of the shortest violating prefix (set when not linearizable).
  std::size_t violating_prefix_events = 0;
  std::uint64_t expansions = 0;
  std::string detail;
};

namespace lincheck_detail {

struct Op {
  int thread = 0;
  OpCode code = OpCode::contains;
  std::vector<Key> args;
  OpResult result;          // meaningful only when completed
  bool completed = false;
  std::uint64_t invoke_index = 0;
  std::uint64_t respond_index = ~0ull;
};

inline std::vector<Op> collect_ops(const History& h) {
  auto issues = history_issues(h);
  if (!issues.empty())
    throw std::invalid_argument("malformed history: " + issues.front());
  std::vector<Op> ops;
  std::vector<std::size_t> open;  // per-thread index into ops
  for (const HistoryEvent& e : h) {
    auto tid = static_cast<std::size_t>(e.thread);
    if (open.size() <= tid) open.resize(tid + 1, static_cast<std::size_t>(-1));
    if (e.kind == HistoryEvent::Kind::invoke) {
      Op op;
      op.thread = e.thread;
      op.code = e.op;
      op.args = e.args;
      op.invoke_index = e.index;
      open[tid] = ops.size();
      ops.push_back(std::move(op));
    } else {
      Op& op = ops[open[tid]];
      op.completed = true;
      op.result = *e.result;
      op.respond_index = e.index;
    }
  }
  return ops;
}

/// Search node identity: which ops have linearized plus the oracle content,
/// the latter as a bitmask over the distinct keys updates mention.
struct MemoKey {
  std::vector<std::uint64_t> words;

  friend bool operator==(const MemoKey&, const MemoKey&) = default;
};

struct MemoKeyHash {
  std::size_t operator()(const MemoKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint64_t w : k.words) {
      h ^= w;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

class Search {
 public:
  Search(std::vector<Op> ops, const LincheckOptions& opts) : ops_(std::move(ops)), opts_(opts) {
    std::set<Key> distinct;
    for (const Op& op : ops_)
      if (op.code == OpCode::add || op.code == OpCode::remove) distinct.insert(op.args[0]);
    state_keys_.assign(distinct.begin(), distinct.end());
    linearized_.assign(ops_.size(), false);
    completed_left_ = 0;
    for (const Op& op : ops_)
      if (op.completed) ++completed_left_;
  }

  LincheckResult run() {
    LincheckResult r;
    bool found = dfs(r);
    r.expansions = expansions_;
    if (out_of_budget_) {
      r.verdict = Verdict::inconclusive;
      r.detail = "search budget exhausted";
    } else if (found) {
      r.verdict = Verdict::linearizable;
      r.witness = order_;
    } else {
      r.verdict = Verdict::not_linearizable;
    }
    return r;
  }

 private:
  bool dfs(LincheckResult& r) {
    if (completed_left_ == 0) return true;
    if (++expansions_ > opts_.max_expansions) {
      out_of_budget_ = true;
      return false;
    }
    if (!memo_insert()) return false;  // revisit of a settled or over-budget state

    // Real-time rule: an op may linearize next only if no unlinearized op
    // responded before it was invoked.
    std::uint64_t min_respond = ~0ull;
    for (std::size_t i = 0; i < ops_.size(); ++i)
      if (!linearized_[i] && ops_[i].completed)
        min_respond = std::min(min_respond, ops_[i].respond_index);

    for (std::size_t i = 0; i < ops_.size(); ++i) {
      const Op& op = ops_[i];
      if (linearized_[i] || op.invoke_index > min_respond) continue;
      if (!op.completed && op.code == OpCode::range)
        continue;  // a pending scan's effects are unobservable; always dropped
      // Tentatively apply; completed ops must reproduce their responses.
      OpResult got = oracle_.apply(op.code, op.args);
      bool mutated = (op.code == OpCode::add || op.code == OpCode::remove) && got.b;
      if (op.completed && !(got == op.result)) {
        if (mutated) undo(op);
        continue;
      }
      linearized_[i] = true;
      if (op.completed) --completed_left_;
      order_.push_back(op.invoke_index);
      if (dfs(r)) return true;
      if (out_of_budget_) return false;
      order_.pop_back();
      if (op.completed) ++completed_left_;
      linearized_[i] = false;
      if (mutated) undo(op);
    }
    return false;
  }

  void undo(const Op& op) {
    // Reverse a successful add/remove.
    if (op.code == OpCode::add)
      oracle_.mutable_state().erase(op.args[0]);
    else
      oracle_.mutable_state().insert(op.args[0]);
  }

  // Returns false when this (linearized-set, oracle-state) was seen before.
  bool memo_insert() {
    if (memo_.size() >= opts_.max_memo_entries) {
      out_of_budget_ = true;
      return false;
    }
    MemoKey key;
    key.words.assign((ops_.size() + 63) / 64 + (state_keys_.size() + 63) / 64 + 1, 0);
    for (std::size_t i = 0; i < ops_.size(); ++i)
      if (linearized_[i]) key.words[i / 64] |= (1ull << (i % 64));
    std::size_t base = (ops_.size() + 63) / 64;
    const auto& s = oracle_.state();
    for (std::size_t i = 0; i < state_keys_.size(); ++i)
      if (s.count(state_keys_[i])) key.words[base + i / 64] |= (1ull << (i % 64));
    return memo_.insert(std::move(key)).second;
  }

  std::vector<Op> ops_;
  LincheckOptions opts_;
  std::vector<Key> state_keys_;
  std::vector<bool> linearized_;
  std::vector<std::uint64_t> order_;
  std::size_t completed_left_ = 0;
  SetOracle oracle_;
  std::unordered_set<MemoKey, MemoKeyHash> memo_;
  std::uint64_t expansions_ = 0;
  bool out_of_budget_ = false;
};

/// Truncate to the first n events; operations whose respond falls outside
/// become pending.
inline History prefix_events(const History& h, std::size_t n) {
  return History(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(n));
}

}  // namespace lincheck_detail

inline LincheckResult check_linearizable(const History& h, LincheckOptions opts = {}) {
  using namespace lincheck_detail;
  LincheckResult r = Search(collect_ops(h), opts).run();
  if (r.verdict == Verdict::not_linearizable && opts.find_minimal_prefix) {
    r.violating_prefix_events = h.size();
    LincheckOptions sub = opts;
    sub.find_minimal_prefix = false;
    for (std::size_t n = 1; n < h.size(); ++n) {
      LincheckResult pr = Search(collect_ops(prefix_events(h, n)), sub).run();
      r.expansions += pr.expansions;
      if (pr.verdict == Verdict::not_linearizable) {
        r.violating_prefix_events = n;
        break;
      }
    }
  }
  return r;
}

}  // namespace versiontree::harness

#endif  // VERSIONTREE_HARNESS_LINCHECK_HPP
