// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_HARNESS_BENCH_HPP
#define VERSIONTREE_HARNESS_BENCH_HPP

/// \file
/// Throughput measurement over the facade with instrumentation disabled:
/// no hooks, no history recording, so the numbers reflect the library's
/// bare fast path. Stress mode answers "is it correct under load"; bench
/// mode answers "how fast is it".

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "../ordered_set.hpp"
#include "workload.hpp"

namespace versiontree::harness {

struct BenchReport {
  struct PerOp {
    std::uint64_t ops = 0;
    double ops_per_sec = 0.0;
  };

  int threads = 0;
  double seconds = 0.0;
  std::uint64_t total_ops = 0;
  double ops_per_sec = 0.0;
  double mean_op_latency_ns = 0.0;
  PerOp contains, add, remove, range;

  nlohmann::json to_json() const {
    auto per_op = [](const PerOp& p) {
      return nlohmann::json{{"ops", p.ops}, {"ops_per_sec", p.ops_per_sec}};
    };
    return nlohmann::json{{"mode", "bench"},
                          {"threads", threads},
                          {"seconds", seconds},
                          {"total_ops", total_ops},
                          {"ops_per_sec", ops_per_sec},
                          {"mean_op_latency_ns", mean_op_latency_ns},
                          {"per_op",
                           {{"contains", per_op(contains)},
                            {"add", per_op(add)},
                            {"remove", per_op(remove)},
                            {"range", per_op(range)}}}};
  }
};

namespace bench_detail {

struct Counts {
  std::uint64_t by_op[4] = {0, 0, 0, 0};

  void bump(OpCode c) { ++by_op[static_cast<int>(c)]; }
  std::uint64_t total() const { return by_op[0] + by_op[1] + by_op[2] + by_op[3]; }
};

/// Spawns one worker per thread, releases them together, and folds the
/// per-thread op counts into a report.
inline BenchReport timed_run(int threads,
                             const std::function<void(OrderedSet&, int, Counts&)>& body,
                             const std::function<void(OrderedSet&)>& setup) {
  OrderedSet set;  // no hooks: bare fast path
  if (setup) setup(set);

  std::vector<Counts> counts(static_cast<std::size_t>(threads));
  std::atomic<bool> go{false};
  std::vector<std::thread> workers;
  for (int t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      go.wait(false);
      body(set, t, counts[static_cast<std::size_t>(t)]);
    });
  }

  auto t0 = std::chrono::steady_clock::now();
  go.store(true);
  go.notify_all();
  for (auto& w : workers) w.join();
  auto t1 = std::chrono::steady_clock::now();

  BenchReport r;
  r.threads = threads;
  r.seconds = std::chrono::duration<double>(t1 - t0).count();
  Counts sum;
  for (const Counts& c : counts)
    for (int i = 0; i < 4; ++i) sum.by_op[i] += c.by_op[i];
  r.total_ops = sum.total();
  double secs = r.seconds > 0 ? r.seconds : 1e-9;
  r.ops_per_sec = static_cast<double>(r.total_ops) / secs;
  r.mean_op_latency_ns =
      r.total_ops ? 1e9 * secs * threads / static_cast<double>(r.total_ops) : 0.0;
  auto fill = [&](BenchReport::PerOp& p, OpCode c) {
    p.ops = sum.by_op[static_cast<int>(c)];
    p.ops_per_sec = static_cast<double>(p.ops) / secs;
  };
  fill(r.contains, OpCode::contains);
  fill(r.add, OpCode::add);
  fill(r.remove, OpCode::remove);
  fill(r.range, OpCode::range);
  return r;
}

}  // namespace bench_detail

/// Benchmarks the configured mixed workload on cfg.threads real threads
/// over a shared key range. Every second key is preseeded so reads and
/// removes hit a populated tree from the first operation.
inline BenchReport run_bench(const WorkloadConfig& cfg) {
  VT_ASSERT(cfg.issues().empty());
  auto setup = [&](OrderedSet& set) {
    for (Key k = cfg.key_lo; k <= cfg.key_hi; k += 2) set.add(k);
  };
  return bench_detail::timed_run(
      cfg.threads,
      [&cfg](OrderedSet& set, int tid, bench_detail::Counts& counts) {
        OpStream stream(cfg, tid);
        for (std::uint64_t i = 0; i < cfg.ops_per_thread; ++i) {
          PlannedOp op = stream.next();
          switch (op.code) {
            case OpCode::contains: set.contains(op.args[0]); break;
            case OpCode::add: set.add(op.args[0]); break;
            case OpCode::remove: set.remove(op.args[0]); break;
            case OpCode::range: set.range(op.args[0], op.args[1]); break;
          }
          counts.bump(op.code);
        }
      },
      setup);
}

/// Benchmarks add/remove/contains with each thread confined to a private
/// key window (same layout as run_disjoint_stress), the workload where
/// updates never meet and the structure should scale.
inline BenchReport run_disjoint_bench(int threads, std::uint64_t ops_per_thread,
                                      Key window_width = 24, std::uint64_t seed = 1) {
  const Key stride = window_width + 4;
  auto setup = [&](OrderedSet& set) {
    for (int t = 0; t < threads; ++t) {
      const Key base = static_cast<Key>(t) * stride;
      for (Key a : {base, base + 1, base + stride - 2, base + stride - 1}) set.add(a);
    }
  };
  return bench_detail::timed_run(
      threads,
      [&](OrderedSet& set, int tid, bench_detail::Counts& counts) {
        std::mt19937_64 rng(seed ^ (0x2545f4914f6cdd1dull * (tid + 1)));
        const Key lo = static_cast<Key>(tid) * stride + 2;
        const Key hi = static_cast<Key>(tid + 1) * stride - 3;
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        for (std::uint64_t i = 0; i < ops_per_thread; ++i) {
          Key k = lo + static_cast<Key>(rng() % span);
          switch (rng() % 3) {
            case 0:
              set.add(k);
              counts.bump(OpCode::add);
              break;
            case 1:
              set.remove(k);
              counts.bump(OpCode::remove);
              break;
            default:
              set.contains(k);
              counts.bump(OpCode::contains);
              break;
          }
        }
      },
      setup);
}

}  // namespace versiontree::harness

#endif  // VERSIONTREE_HARNESS_BENCH_HPP
