// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_HARNESS_DPOR_HPP
#define VERSIONTREE_HARNESS_DPOR_HPP

/// \file
/// Exhaustive interleaving enumeration with partial-order reduction.
/// Steps of different threads commute unless they touch the same cell and
/// at least one writes, so schedules that only reorder commuting steps form
/// an equivalence class with identical outcomes. The explorer walks the
/// schedule tree depth-first with sleep sets, which visits exactly one
/// representative execution per class: after a branch that runs thread p
/// first has been fully explored, sibling branches put p to sleep until
/// some executed step conflicts with p's pending access.
///
/// The stepper replays deterministically from scratch, so backtracking
/// needs no state snapshots: the explorer rebuilds the stepper and replays
/// the current choice prefix whenever it descends into a new sibling.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "history.hpp"
#include "stepper.hpp"

namespace versiontree::harness {

/// A pending access in a form that survives rebuilding the stepper: the
/// explorer replays prefixes on fresh instances, so raw cell addresses
/// from an earlier instance would be meaningless. The stepper's logical
/// cell ids are replay-stable.
struct DporAccess {
  int thread = -1;
  Step step = Step::invoke;
  StepKind kind = StepKind::load;
  CellKind cell_kind = CellKind::recorder;
  int cell = -1;
};

inline DporAccess dpor_access(Stepper& s, int tid) {
  const StepPoint& pt = s.pending(tid);
  return DporAccess{pt.thread, pt.step, pt.kind, pt.cell_kind, s.cell_id(pt.cell)};
}

/// Whether two steps may not be reordered without changing the outcome.
/// Same-thread steps are always ordered by the program. The recorder cell
/// gets a semantic rule: swapping two adjacent invokes (or two responds)
/// of different threads never changes which operations precede which, so
/// only invoke/respond pairs conflict there.
inline bool dpor_dependent(const DporAccess& a, const DporAccess& b) noexcept {
  if (a.thread == b.thread) return true;
  if (a.cell != b.cell) return false;
  if (a.cell_kind == CellKind::recorder) return a.step != b.step;
  return a.kind != StepKind::load || b.kind != StepKind::load;
}

struct DporOptions {
  std::uint64_t max_executions = 2'000'000;
};

struct DporStats {
  std::uint64_t executions = 0;   // maximal executions visited (trace classes)
  std::uint64_t steps = 0;        // forward steps, excluding replay work
  std::uint64_t replay_steps = 0;
  bool complete = true;           // false once max_executions stopped the walk
};

/// Explores every trace class of the concurrent program the factory builds.
/// `make` returns a fresh stepper positioned at the initial state (it may
/// have run a sequential setup prefix); `on_execution` is called with the
/// stepper at every maximal execution.
inline DporStats explore_all_traces(
    const std::function<std::unique_ptr<Stepper>()>& make,
    const std::function<void(Stepper&)>& on_execution, const DporOptions& opts = {}) {
  struct SleepEntry {
    int thread;
    DporAccess access;  // the sleeping thread's pending access (it has not moved)
  };
  struct Node {
    std::vector<SleepEntry> sleep;
    std::vector<int> cand;                // runnable minus sleeping, in id order
    std::vector<DporAccess> cand_access;  // pending access per candidate
    std::size_t next = 0;
  };

  DporStats st;
  std::unique_ptr<Stepper> s = make();
  std::vector<Node> path;
  std::vector<int> choices;  // executed thread per level, for replay
  bool synced = true;        // stepper state matches `choices`

  auto open_node = [&](std::vector<SleepEntry> sleep) {
    Node n;
    n.sleep = std::move(sleep);
    for (int tid : s->runnable()) {
      bool asleep = false;
      for (const SleepEntry& e : n.sleep)
        if (e.thread == tid) {
          asleep = true;
          break;
        }
      if (!asleep) {
        n.cand.push_back(tid);
        n.cand_access.push_back(dpor_access(*s, tid));
      }
    }
    path.push_back(std::move(n));
  };

  open_node({});
  while (!path.empty()) {
    Node& top = path.back();
    if (top.next >= top.cand.size()) {
      // All siblings explored (or every runnable thread is asleep, in which
      // case this subtree is covered by a branch explored earlier).
      path.pop_back();
      if (!choices.empty() && path.size() == choices.size()) {
        choices.pop_back();
        synced = false;
      }
      continue;
    }
    std::size_t k = top.next++;
    int tid = top.cand[k];
    DporAccess acc = top.cand_access[k];

    if (!synced) {
      s = make();
      for (int c : choices) {
        s->step(c);
        ++st.replay_steps;
      }
      synced = true;
    }

    // Sleepers stay asleep across an independent step; explored elder
    // siblings fall asleep for this branch unless the chosen step wakes
    // them by conflicting.
    std::vector<SleepEntry> child_sleep;
    for (const SleepEntry& e : top.sleep)
      if (!dpor_dependent(e.access, acc)) child_sleep.push_back(e);
    for (std::size_t j = 0; j < k; ++j)
      if (!dpor_dependent(top.cand_access[j], acc))
        child_sleep.push_back(SleepEntry{top.cand[j], top.cand_access[j]});

    s->step(tid);
    ++st.steps;
    choices.push_back(tid);

    if (s->runnable().empty()) {
      ++st.executions;
      on_execution(*s);
      if (st.executions >= opts.max_executions) {
        st.complete = false;
        break;
      }
      choices.pop_back();
      synced = false;
      continue;
    }
    open_node(std::move(child_sleep));
  }
  return st;
}

/// Canonical fingerprint of an execution outcome, stable across equivalent
/// interleavings: per-thread operation sequences with results, the
/// precedence relation between completed operations (which is all a
/// linearizability verdict can depend on), and the final tree fingerprint.
inline std::string canonical_outcome(const History& h, std::uint64_t tree_fingerprint) {
  struct Op {
    int thread;
    std::size_t ordinal;  // per-thread position
    std::string text;
    std::uint64_t invoke_index = 0;
    std::uint64_t respond_index = 0;
    bool completed = false;
  };
  std::vector<Op> ops;
  auto find_open = [&](int thread) -> Op* {
    for (auto it = ops.rbegin(); it != ops.rend(); ++it)
      if (it->thread == thread && !it->completed) return &*it;
    return nullptr;
  };
  std::vector<std::size_t> next_ordinal(64, 0);
  for (const HistoryEvent& e : h) {
    if (e.kind == HistoryEvent::Kind::invoke) {
      Op op;
      op.thread = e.thread;
      op.ordinal = next_ordinal.at(static_cast<std::size_t>(e.thread))++;
      std::ostringstream os;
      os << op_name(e.op);
      for (Key k : e.args) os << " " << k;
      op.text = os.str();
      op.invoke_index = e.index;
      ops.push_back(std::move(op));
    } else {
      Op* op = find_open(e.thread);
      if (op == nullptr) continue;  // malformed; canonicalization is best effort
      op->completed = true;
      op->respond_index = e.index;
      std::ostringstream os;
      os << op->text << " -> ";
      if (e.result->type == OpResult::Type::boolean) {
        os << (e.result->b ? "true" : "false");
      } else {
        os << "[";
        for (std::size_t i = 0; i < e.result->keys.size(); ++i)
          os << (i ? " " : "") << e.result->keys[i];
        os << "]";
      }
      op->text = os.str();
    }
  }
  // List ops by stable (thread, ordinal) position, not by invoke order:
  // equivalent interleavings may swap adjacent invokes of different threads.
  std::sort(ops.begin(), ops.end(), [](const Op& a, const Op& b) {
    return a.thread != b.thread ? a.thread < b.thread : a.ordinal < b.ordinal;
  });
  std::ostringstream out;
  for (const Op& op : ops)
    out << op.thread << "." << op.ordinal << ": " << op.text
        << (op.completed ? "" : " (pending)") << "\n";
  // Precedence edges, named by stable (thread, ordinal) pairs.
  for (const Op& a : ops)
    for (const Op& b : ops)
      if (a.completed && a.respond_index < b.invoke_index)
        out << a.thread << "." << a.ordinal << " < " << b.thread << "." << b.ordinal << "\n";
  out << "tree " << tree_fingerprint << "\n";
  return out.str();
}

/// Plain depth-first enumeration of every interleaving, with no reduction.
/// Only usable for very small programs; the DPOR tests cross-check the
/// reduced exploration against it.
inline DporStats explore_naive(const std::function<std::unique_ptr<Stepper>()>& make,
                               const std::function<void(Stepper&)>& on_execution,
                               const DporOptions& opts = {}) {
  struct Node {
    std::vector<int> cand;
    std::size_t next = 0;
  };
  DporStats st;
  std::unique_ptr<Stepper> s = make();
  std::vector<Node> path;
  std::vector<int> choices;
  bool synced = true;

  auto open_node = [&] {
    Node n;
    n.cand = s->runnable();
    path.push_back(std::move(n));
  };

  open_node();
  while (!path.empty()) {
    Node& top = path.back();
    if (top.next >= top.cand.size()) {
      path.pop_back();
      if (!choices.empty() && path.size() == choices.size()) {
        choices.pop_back();
        synced = false;
      }
      continue;
    }
    int tid = top.cand[top.next++];
    if (!synced) {
      s = make();
      for (int c : choices) {
        s->step(c);
        ++st.replay_steps;
      }
      synced = true;
    }
    s->step(tid);
    ++st.steps;
    choices.push_back(tid);
    if (s->runnable().empty()) {
      ++st.executions;
      on_execution(*s);
      if (st.executions >= opts.max_executions) {
        st.complete = false;
        break;
      }
      choices.pop_back();
      synced = false;
      continue;
    }
    open_node();
  }
  return st;
}

}  // namespace versiontree::harness

#endif  // VERSIONTREE_HARNESS_DPOR_HPP
