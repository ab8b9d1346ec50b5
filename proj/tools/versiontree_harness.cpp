// SPDX-License-Identifier: MIT
//
// versiontree-harness: stress, lincheck, stepper and bench modes over the
// concurrent ordered set, sharing one workload configuration.
//
// Exit codes: 0 pass, 1 property violation, 2 inconclusive (search budget),
// 3 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "versiontree/harness/bench.hpp"
#include "versiontree/harness/invariants.hpp"
#include "versiontree/harness/lincheck.hpp"
#include "versiontree/harness/stepper.hpp"
#include "versiontree/harness/stress.hpp"

using namespace versiontree;
using namespace versiontree::harness;

namespace {

constexpr int kPass = 0;
constexpr int kViolation = 1;
constexpr int kInconclusive = 2;
constexpr int kUsage = 3;

int usage_error(const std::string& msg) {
  std::cerr << "versiontree-harness: " << msg << "\n";
  return kUsage;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  return static_cast<bool>(os);
}

int run_stress_mode(const WorkloadConfig& cfg, const std::string& out_path) {
  StressOptions opts;
  opts.audit_versions = true;
  StressReport rep = run_stress(cfg, opts);

  if (!out_path.empty()) {
    std::ostringstream os;
    write_history(os, rep.history);
    if (!write_file(out_path, os.str()))
      return usage_error("cannot write history to " + out_path);
  }

  std::cout << "stress: " << rep.completed_ops << " ops on " << cfg.threads
            << " threads in " << rep.seconds << " s, " << rep.phases_used
            << " phases, " << rep.helps_total << " helps (" << rep.helps_other
            << " for others), " << rep.prev_hops << " prev hops\n";

  auto issues = history_issues(rep.history);
  for (const std::string& s : issues) std::cerr << "history: " << s << "\n";
  for (const std::string& s : rep.audit_issues) std::cerr << "audit: " << s << "\n";
  if (rep.watchdog_fired) {
    std::cerr << "watchdog: no progress; last step per thread:\n";
    for (std::size_t t = 0; t < rep.stuck_labels.size(); ++t)
      std::cerr << "  thread " << t << ": " << rep.stuck_labels[t] << "\n";
  }
  bool ok = issues.empty() && rep.audit_issues.empty() && !rep.watchdog_fired;
  std::cout << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kPass : kViolation;
}

int run_lincheck_mode(const WorkloadConfig& cfg, const std::string& out_path) {
  StressOptions opts;
  opts.audit_versions = false;
  StressReport rep = run_stress(cfg, opts);

  if (!out_path.empty()) {
    std::ostringstream os;
    write_history(os, rep.history);
    if (!write_file(out_path, os.str()))
      return usage_error("cannot write history to " + out_path);
  }

  auto issues = history_issues(rep.history);
  if (!issues.empty()) {
    for (const std::string& s : issues) std::cerr << "history: " << s << "\n";
    std::cout << "FAIL\n";
    return kViolation;
  }

  LincheckResult r = check_linearizable(rep.history);
  std::cout << "lincheck: " << rep.completed_ops << " ops, verdict "
            << verdict_name(r.verdict) << " after " << r.expansions << " expansions\n";
  switch (r.verdict) {
    case Verdict::linearizable:
      std::cout << "PASS\n";
      return kPass;
    case Verdict::not_linearizable:
      std::cerr << "violating prefix: first " << r.violating_prefix_events
                << " events\n";
      if (!r.detail.empty()) std::cerr << r.detail << "\n";
      std::cout << "FAIL\n";
      return kViolation;
    case Verdict::inconclusive:
      if (!r.detail.empty()) std::cerr << r.detail << "\n";
      std::cout << "INCONCLUSIVE\n";
      return kInconclusive;
  }
  return kInconclusive;
}

int run_stepper_mode(const WorkloadConfig& cfg, const std::string& out_path,
                     const std::string& schedule_path) {
  if (cfg.threads > 3)
    return usage_error("stepper mode runs at most 3 logical threads");

  std::optional<StepperSchedule> replay;
  if (!schedule_path.empty()) {
    std::ifstream is(schedule_path);
    if (!is) return usage_error("cannot read schedule " + schedule_path);
    try {
      replay = parse_schedule(is);
    } catch (const std::invalid_argument& e) {
      return usage_error(std::string("bad schedule: ") + e.what());
    }
  }

  Stepper s;
  StandardCheckers checkers;
  checkers.attach(s);
  for (int t = 0; t < cfg.threads; ++t) {
    s.add_thread([&s, cfg, t] {
      OpStream stream(cfg, t);
      for (std::uint64_t i = 0; i < cfg.ops_per_thread; ++i) s.run_op(stream.next());
    });
  }

  StepperSchedule executed;
  if (replay) {
    try {
      s.run_schedule(*replay);
    } catch (const std::logic_error& e) {
      std::cerr << "replay diverged: " << e.what() << "\n";
      std::cout << "FAIL\n";
      return kViolation;
    }
    executed = *replay;
  } else {
    executed = s.run_random(cfg.seed);
  }
  s.finish();

  if (!out_path.empty() && !write_file(out_path, serialize_schedule(executed)))
    return usage_error("cannot write schedule to " + out_path);

  std::cout << "stepper: " << executed.size() << " steps, "
            << s.history().size() << " history events\n";

  bool ok = true;
  for (const std::string& v : checkers.all_violations()) {
    std::cerr << "invariant: " << v << "\n";
    ok = false;
  }
  std::uint64_t top = s.tree().counter().value.load();
  for (std::uint64_t i = 0; i <= top; ++i) {
    auto audit = inspect::audit_leaf_oriented_bst(inspect::materialize_version(s.tree(), i));
    for (const std::string& issue : audit.issues) {
      std::cerr << "audit phase " << i << ": " << issue << "\n";
      ok = false;
    }
  }
  if (!ok) {
    std::cout << "FAIL\n";
    return kViolation;
  }

  LincheckResult r = check_linearizable(s.history());
  if (r.verdict == Verdict::not_linearizable) {
    std::cerr << "history not linearizable; violating prefix: first "
              << r.violating_prefix_events << " events\n";
    std::cout << "FAIL\n";
    return kViolation;
  }
  if (r.verdict == Verdict::inconclusive) {
    std::cout << "INCONCLUSIVE\n";
    return kInconclusive;
  }
  std::cout << "PASS\n";
  return kPass;
}

int run_bench_mode(const WorkloadConfig& cfg, const std::string& out_path) {
  // Per-thread-count series: powers of two up to the requested count.
  std::vector<int> counts;
  for (int t = 1; t < cfg.threads; t *= 2) counts.push_back(t);
  counts.push_back(cfg.threads);

  nlohmann::json runs = nlohmann::json::array();
  for (int t : counts) {
    WorkloadConfig c = cfg;
    c.threads = t;
    BenchReport r = run_bench(c);
    runs.push_back(r.to_json());
    std::printf("bench: %d thread%s  %10.0f ops/s  (%llu ops in %.3f s)\n", t,
                t == 1 ? " " : "s", r.ops_per_sec,
                static_cast<unsigned long long>(r.total_ops), r.seconds);
  }

  if (!out_path.empty()) {
    nlohmann::json doc{{"mode", "bench"}, {"runs", runs}};
    if (!write_file(out_path, doc.dump(2) + "\n"))
      return usage_error("cannot write report to " + out_path);
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concurrent ordered-set harness: stress, lincheck, stepper, bench"};
  app.name("versiontree-harness");

  std::string mode_str;
  WorkloadConfig cfg;
  std::string keys_str = "0:7";
  std::string mix_str = "40:30:20:10";
  std::string out_path;
  std::string schedule_path;

  app.add_option("mode", mode_str, "stress | lincheck | stepper | bench")->required();
  app.add_option("--threads", cfg.threads, "worker thread count");
  app.add_option("--ops", cfg.ops_per_thread, "operations per thread");
  app.add_option("--keys", keys_str, "inclusive key range LO:HI");
  app.add_option("--mix", mix_str, "percentages contains:add:remove:range");
  app.add_option("--range-width", cfg.range_width, "key span of a range scan");
  app.add_option("--seed", cfg.seed, "workload and schedule seed");
  app.add_option("--out", out_path, "write history/schedule/report here");
  app.add_option("--schedule", schedule_path, "stepper mode: replay this schedule");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kPass : kUsage;
  }

  auto mode = parse_mode(mode_str);
  if (!mode) return usage_error("unknown mode: " + mode_str);
  cfg.mode = *mode;

  auto keys = parse_keys(keys_str);
  if (!keys) return usage_error("bad --keys (want LO:HI): " + keys_str);
  cfg.key_lo = keys->first;
  cfg.key_hi = keys->second;

  auto mix = parse_mix(mix_str);
  if (!mix) return usage_error("bad --mix (want c:a:r:s): " + mix_str);
  cfg.mix = *mix;

  auto issues = cfg.issues();
  if (!issues.empty()) {
    for (const std::string& s : issues) std::cerr << "versiontree-harness: " << s << "\n";
    return kUsage;
  }

  if (!schedule_path.empty() && *mode != Mode::stepper)
    return usage_error("--schedule only applies to stepper mode");

  switch (*mode) {
    case Mode::stress: return run_stress_mode(cfg, out_path);
    case Mode::lincheck: return run_lincheck_mode(cfg, out_path);
    case Mode::stepper: return run_stepper_mode(cfg, out_path, schedule_path);
    case Mode::bench: return run_bench_mode(cfg, out_path);
  }
  return kUsage;
}
