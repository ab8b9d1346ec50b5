// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_HARNESS_STRESS_HPP
#define VERSIONTREE_HARNESS_STRESS_HPP

/// \file
/// Real-thread stress runs over the facade: spawn threads, drive workload
/// streams, record the history, watch for global progress, and audit every
/// version tree at quiescence.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "../inspect.hpp"
#include "../ordered_set.hpp"
#include "history.hpp"
#include "oracle.hpp"
#include "workload.hpp"

namespace versiontree::harness {

/// Always-on stress instrumentation: cheap relaxed counters plus a
/// per-thread "where was I last" label for watchdog reports. The per-step
/// callback does one relaxed store, keeping the instrumented fast path thin.
class StressHooks final : public ExecutionHooks {
 public:
  explicit StressHooks(int threads) : last_label_(static_cast<std::size_t>(threads)) {
    for (auto& l : last_label_) l.store(nullptr, std::memory_order_relaxed);
  }

  void on_help(int, const InfoObject&, HelpReason reason) override {
    helps_total_.fetch_add(1, std::memory_order_relaxed);
    if (reason != HelpReason::own_descriptor)
      helps_other_.fetch_add(1, std::memory_order_relaxed);
  }

  void on_prev_hop(int, const NodeBase&, const NodeBase&) override {
    prev_hops_.fetch_add(1, std::memory_order_relaxed);
  }

  void before_step(const StepPoint& pt) override {
    int t = pt.thread;
    if (t >= 0 && static_cast<std::size_t>(t) < last_label_.size())
      last_label_[static_cast<std::size_t>(t)].store(step_name(pt.step),
                                                    std::memory_order_relaxed);
  }

  std::uint64_t helps_total() const { return helps_total_.load(std::memory_order_relaxed); }
  std::uint64_t helps_other() const { return helps_other_.load(std::memory_order_relaxed); }
  std::uint64_t prev_hops() const { return prev_hops_.load(std::memory_order_relaxed); }

  std::vector<std::string> last_labels() const {
    std::vector<std::string> out;
    for (const auto& l : last_label_) {
      const char* s = l.load(std::memory_order_relaxed);
      out.push_back(s ? s : "(no step yet)");
    }
    return out;
  }

 private:
  std::atomic<std::uint64_t> helps_total_{0};
  std::atomic<std::uint64_t> helps_other_{0};
  std::atomic<std::uint64_t> prev_hops_{0};
  std::vector<std::atomic<const char*>> last_label_;
};

struct StressOptions {
  bool record_history = true;
  bool audit_versions = false;
  /// Seconds without any completed operation before the watchdog declares
  /// the run stuck. 0 disables the watchdog.
  int watchdog_seconds = 30;
};

struct StressReport {
  History history;
  std::uint64_t completed_ops = 0;
  std::uint64_t phases_used = 0;
  std::uint64_t helps_total = 0;
  std::uint64_t helps_other = 0;
  std::uint64_t prev_hops = 0;
  bool watchdog_fired = false;
  std::vector<std::string> stuck_labels;
  std::vector<std::string> audit_issues;
  double seconds = 0.0;
};

namespace stress_detail {

struct RunCtx {
  OrderedSet& set;
  HistoryRecorder& rec;
  std::atomic<std::uint64_t>& completed;
  bool record_history;
};

inline void run_one_op(RunCtx& ctx, int tid, History& sink, const PlannedOp& op) {
  HistoryEvent inv;
  inv.kind = HistoryEvent::Kind::invoke;
  inv.thread = tid;
  inv.op = op.code;
  inv.args = op.args;
  inv.index = ctx.rec.stamp();

  OpResult result;
  switch (op.code) {
    case OpCode::contains: result = OpResult::of(ctx.set.contains(op.args[0])); break;
    case OpCode::add: result = OpResult::of(ctx.set.add(op.args[0])); break;
    case OpCode::remove: result = OpResult::of(ctx.set.remove(op.args[0])); break;
    case OpCode::range: result = OpResult::of(ctx.set.range(op.args[0], op.args[1])); break;
  }

  HistoryEvent res = inv;
  res.kind = HistoryEvent::Kind::respond;
  res.result = std::move(result);
  res.index = ctx.rec.stamp();
  ctx.completed.fetch_add(1, std::memory_order_relaxed);
  if (ctx.record_history) {
    sink.push_back(std::move(inv));
    sink.push_back(std::move(res));
  }
}

/// Shared machinery: optional single-threaded setup on the fresh facade,
/// then one body per thread, with recorder, watchdog and quiescent audit.
inline StressReport run_threads(int threads, const StressOptions& opts,
                                const std::function<void(OrderedSet&)>& setup,
                                const std::function<void(RunCtx&, int, History&)>& body) {
  StressHooks hooks(threads);
  OrderedSet set(&hooks);
  HistoryRecorder recorder;
  std::vector<History> buffers(static_cast<std::size_t>(threads));
  std::atomic<std::uint64_t> completed{0};
  std::atomic<bool> done{false};
  StressReport report;
  RunCtx ctx{set, recorder, completed, opts.record_history};

  if (setup) {
    this_thread_id() = 0;
    setup(set);
    this_thread_id() = -1;
  }

  auto t0 = std::chrono::steady_clock::now();
  std::thread watchdog;
  if (opts.watchdog_seconds > 0) {
    watchdog = std::thread([&] {
      std::uint64_t last = completed.load();
      auto last_change = std::chrono::steady_clock::now();
      while (!done.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        std::uint64_t now_ops = completed.load();
        auto now = std::chrono::steady_clock::now();
        if (now_ops != last) {
          last = now_ops;
          last_change = now;
        } else if (now - last_change > std::chrono::seconds(opts.watchdog_seconds)) {
          report.watchdog_fired = true;
          report.stuck_labels = hooks.last_labels();
          return;  // leave the run to its fate; caller sees the report
        }
      }
    });
  }

  {
    std::vector<std::thread> workers;
    for (int t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        this_thread_id() = t;
        body(ctx, t, buffers[static_cast<std::size_t>(t)]);
      });
    }
    for (auto& w : workers) w.join();
  }
  done.store(true);
  if (watchdog.joinable()) watchdog.join();

  auto t1 = std::chrono::steady_clock::now();
  report.seconds = std::chrono::duration<double>(t1 - t0).count();
  report.history = HistoryRecorder::merge(std::move(buffers));
  report.completed_ops = completed.load();
  report.phases_used = set.tree().counter().value.load();
  report.helps_total = hooks.helps_total();
  report.helps_other = hooks.helps_other();
  report.prev_hops = hooks.prev_hops();

  if (opts.audit_versions) {
    for (std::uint64_t i = 0; i <= report.phases_used; ++i) {
      VersionTree vt = reconstruct_version_tree(set.tree(), i);
      auto rep = inspect::audit_leaf_oriented_bst(vt);
      for (const std::string& issue : rep.issues)
        report.audit_issues.push_back("phase " + std::to_string(i) + ": " + issue);
    }
  }
  return report;
}

}  // namespace stress_detail

/// Runs the configured workload on real threads and reports the recorded
/// history plus counters. Operations never block; the watchdog reports if
/// global progress somehow stalls anyway.
inline StressReport run_stress(const WorkloadConfig& cfg, const StressOptions& opts = {}) {
  VT_ASSERT(cfg.issues().empty());
  return stress_detail::run_threads(
      cfg.threads, opts, nullptr,
      [&cfg](stress_detail::RunCtx& ctx, int tid, History& sink) {
        OpStream stream(cfg, tid);
        for (std::uint64_t i = 0; i < cfg.ops_per_thread; ++i)
          stress_detail::run_one_op(ctx, tid, sink, stream.next());
      });
}

/// Stress variant where each thread works an exclusive key window, the
/// windows separated by permanently present anchor keys that no thread
/// touches after preseeding. Updates in different windows then never meet
/// on a node, so no operation should ever need to help another.
struct DisjointStressConfig {
  int threads = 4;
  std::uint64_t ops_per_thread = 2000;
  Key window_width = 24;  // interior keys per thread window, anchors excluded
  std::uint64_t seed = 1;
};

inline StressReport run_disjoint_stress(const DisjointStressConfig& cfg,
                                        const StressOptions& opts = {}) {
  // Window t covers [t*(W+4), (t+1)*(W+4)); its two lowest and two highest
  // keys are anchors, the rest is the thread's private interior.
  const Key stride = cfg.window_width + 4;
  auto interior_lo = [&](int t) { return static_cast<Key>(t) * stride + 2; };
  auto interior_hi = [&](int t) { return static_cast<Key>(t + 1) * stride - 3; };

  auto setup = [&](OrderedSet& set) {
    for (int t = 0; t < cfg.threads; ++t) {
      const Key base = static_cast<Key>(t) * stride;
      for (Key a : {base, base + 1, base + stride - 2, base + stride - 1}) set.add(a);
    }
  };

  return stress_detail::run_threads(
      cfg.threads, opts, setup,
      [&](stress_detail::RunCtx& ctx, int tid, History& sink) {
        std::mt19937_64 rng(cfg.seed ^ (0x2545f4914f6cdd1dull * (tid + 1)));
        const Key lo = interior_lo(tid);
        const Key hi = interior_hi(tid);
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        for (std::uint64_t i = 0; i < cfg.ops_per_thread; ++i) {
          Key k = lo + static_cast<Key>(rng() % span);
          PlannedOp op;
          switch (rng() % 3) {
            case 0: op.code = OpCode::add; break;
            case 1: op.code = OpCode::remove; break;
            default: op.code = OpCode::contains; break;
          }
          op.args = {k};
          stress_detail::run_one_op(ctx, tid, sink, op);
        }
      });
}

}  // namespace versiontree::harness

#endif  // VERSIONTREE_HARNESS_STRESS_HPP
