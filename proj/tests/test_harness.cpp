// SPDX-License-Identifier: MIT
//
// Harness building blocks: history serialization, the sequential oracle,
// workload streams, the linearizability checker, and stress runs.

#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "versiontree/harness/history.hpp"
#include "versiontree/harness/lincheck.hpp"
#include "versiontree/harness/oracle.hpp"
#include "versiontree/harness/stress.hpp"
#include "versiontree/harness/workload.hpp"

using namespace versiontree;
using namespace versiontree::harness;

namespace {

HistoryEvent ev(HistoryEvent::Kind kind, int thread, OpCode op, std::vector<Key> args,
                std::uint64_t index) {
  HistoryEvent e;
  e.kind = kind;
  e.thread = thread;
  e.op = op;
  e.args = std::move(args);
  e.index = index;
  return e;
}

HistoryEvent inv(int thread, OpCode op, std::vector<Key> args, std::uint64_t index) {
  return ev(HistoryEvent::Kind::invoke, thread, op, std::move(args), index);
}

HistoryEvent res(int thread, OpCode op, std::vector<Key> args, OpResult r,
                 std::uint64_t index) {
  HistoryEvent e = ev(HistoryEvent::Kind::respond, thread, op, std::move(args), index);
  e.result = std::move(r);
  return e;
}

}  // namespace

TEST_CASE("history JSONL round trip is bit-exact") {
  History h;
  h.push_back(inv(0, OpCode::add, {5}, 0));
  h.push_back(res(0, OpCode::add, {5}, OpResult::of(true), 1));
  h.push_back(inv(1, OpCode::range, {2, 9}, 2));
  h.push_back(inv(2, OpCode::contains, {-3}, 3));
  h.push_back(res(2, OpCode::contains, {-3}, OpResult::of(false), 4));
  h.push_back(res(1, OpCode::range, {2, 9}, OpResult::of(std::vector<Key>{5, 7}), 5));

  std::ostringstream first;
  write_history(first, h);
  std::istringstream back(first.str());
  History reparsed = parse_history(back);
  REQUIRE(reparsed == h);
  std::ostringstream second;
  write_history(second, reparsed);
  CHECK(first.str() == second.str());
}

TEST_CASE("history parser accepts shuffled fields and normalizes them") {
  std::istringstream is(
      "{\"index\":7,\"args\":[1],\"op\":\"add\",\"kind\":\"invoke\",\"thread\":3}\n");
  History h = parse_history(is);
  REQUIRE(h.size() == 1);
  CHECK(h[0] == inv(3, OpCode::add, {1}, 7));
  CHECK(to_jsonl_line(h[0]) ==
        "{\"kind\":\"invoke\",\"thread\":3,\"op\":\"add\",\"args\":[1],\"index\":7}");
}

TEST_CASE("history well-formedness checks") {
  History good;
  good.push_back(inv(0, OpCode::add, {1}, 0));
  good.push_back(inv(1, OpCode::contains, {1}, 1));
  good.push_back(res(0, OpCode::add, {1}, OpResult::of(true), 2));
  CHECK(history_issues(good).empty());

  History double_invoke;
  double_invoke.push_back(inv(0, OpCode::add, {1}, 0));
  double_invoke.push_back(inv(0, OpCode::add, {2}, 1));
  CHECK_FALSE(history_issues(double_invoke).empty());

  History orphan_respond;
  orphan_respond.push_back(res(0, OpCode::add, {1}, OpResult::of(true), 0));
  CHECK_FALSE(history_issues(orphan_respond).empty());

  History out_of_order = good;
  out_of_order[2].index = 0;
  CHECK_FALSE(history_issues(out_of_order).empty());
}

TEST_CASE("oracle implements the sequential sorted-set semantics") {
  SetOracle o;
  CHECK(o.apply(OpCode::contains, {5}) == OpResult::of(false));
  CHECK(o.apply(OpCode::add, {5}) == OpResult::of(true));
  CHECK(o.apply(OpCode::add, {5}) == OpResult::of(false));
  CHECK(o.apply(OpCode::add, {3}) == OpResult::of(true));
  CHECK(o.apply(OpCode::range, {1, 9}) == OpResult::of(std::vector<Key>{3, 5}));
  CHECK(o.apply(OpCode::remove, {5}) == OpResult::of(true));
  CHECK(o.apply(OpCode::remove, {5}) == OpResult::of(false));
  CHECK(o.apply(OpCode::range, {1, 9}) == OpResult::of(std::vector<Key>{3}));
}

TEST_CASE("workload argument parsing") {
  auto keys = parse_keys("0:7");
  REQUIRE(keys.has_value());
  CHECK(keys->first == 0);
  CHECK(keys->second == 7);
  CHECK(parse_keys("-5:12").has_value());
  CHECK_FALSE(parse_keys("12").has_value());
  CHECK_FALSE(parse_keys("a:b").has_value());
  CHECK_FALSE(parse_keys("3:").has_value());

  auto mix = parse_mix("40:30:20:10");
  REQUIRE(mix.has_value());
  CHECK(mix->contains == 40);
  CHECK(mix->range == 10);
  CHECK_FALSE(parse_mix("40:30:20").has_value());
  CHECK_FALSE(parse_mix("a:b:c:d").has_value());

  WorkloadConfig bad;
  bad.mix = MixSpec{50, 50, 50, 0};
  CHECK_FALSE(bad.issues().empty());
  WorkloadConfig good;
  CHECK(good.issues().empty());
}

TEST_CASE("op streams are deterministic per (config, thread)") {
  WorkloadConfig cfg;
  cfg.seed = 9;
  cfg.key_lo = 10;
  cfg.key_hi = 20;
  cfg.range_width = 3;
  OpStream a(cfg, 0), b(cfg, 0), c(cfg, 1);
  bool all_same = true, any_diff = false;
  for (int i = 0; i < 200; ++i) {
    PlannedOp pa = a.next(), pb = b.next(), pc = c.next();
    all_same = all_same && pa.code == pb.code && pa.args == pb.args;
    any_diff = any_diff || pa.code != pc.code || pa.args != pc.args;
    REQUIRE(pa.args[0] >= cfg.key_lo);
    REQUIRE(pa.args[0] <= cfg.key_hi);
    if (pa.code == OpCode::range) {
      REQUIRE(pa.args[1] >= pa.args[0]);
      REQUIRE(pa.args[1] - pa.args[0] <= cfg.range_width);
    }
  }
  CHECK(all_same);
  CHECK(any_diff);
}

TEST_CASE("lincheck accepts a sequential chain") {
  History h;
  h.push_back(inv(1, OpCode::add, {1}, 0));
  h.push_back(res(1, OpCode::add, {1}, OpResult::of(true), 1));
  h.push_back(inv(2, OpCode::contains, {1}, 2));
  h.push_back(res(2, OpCode::contains, {1}, OpResult::of(true), 3));
  auto r = check_linearizable(h);
  CHECK(r.verdict == Verdict::linearizable);
  CHECK(r.witness == std::vector<std::uint64_t>{0, 2});
}

TEST_CASE("lincheck rejects an effect observed before its cause") {
  History h;
  h.push_back(inv(2, OpCode::contains, {1}, 0));
  h.push_back(res(2, OpCode::contains, {1}, OpResult::of(true), 1));
  h.push_back(inv(1, OpCode::add, {1}, 2));
  h.push_back(res(1, OpCode::add, {1}, OpResult::of(true), 3));
  auto r = check_linearizable(h);
  CHECK(r.verdict == Verdict::not_linearizable);
  CHECK(r.violating_prefix_events == 2);
}

TEST_CASE("lincheck may linearize a pending update to explain a response") {
  History h;
  h.push_back(inv(1, OpCode::add, {1}, 0));  // never responds
  h.push_back(inv(2, OpCode::contains, {1}, 1));
  h.push_back(res(2, OpCode::contains, {1}, OpResult::of(true), 2));
  auto r = check_linearizable(h);
  CHECK(r.verdict == Verdict::linearizable);
  CHECK(r.witness == std::vector<std::uint64_t>{0, 1});
}

TEST_CASE("lincheck never linearizes a pending scan") {
  History h;
  h.push_back(inv(1, OpCode::range, {0, 9}, 0));  // never responds
  h.push_back(inv(2, OpCode::add, {5}, 1));
  h.push_back(res(2, OpCode::add, {5}, OpResult::of(true), 2));
  auto r = check_linearizable(h);
  CHECK(r.verdict == Verdict::linearizable);
  CHECK(r.witness == std::vector<std::uint64_t>{1});
}

TEST_CASE("lincheck rejects histories no pending op can repair") {
  History h;
  h.push_back(inv(1, OpCode::add, {1}, 0));  // pending: can only add
  h.push_back(inv(2, OpCode::contains, {1}, 1));
  h.push_back(res(2, OpCode::contains, {1}, OpResult::of(true), 2));
  h.push_back(inv(3, OpCode::contains, {1}, 3));
  h.push_back(res(3, OpCode::contains, {1}, OpResult::of(false), 4));
  auto r = check_linearizable(h);
  CHECK(r.verdict == Verdict::not_linearizable);
}

TEST_CASE("lincheck validates range responses exactly") {
  History h;
  h.push_back(inv(0, OpCode::add, {3}, 0));
  h.push_back(res(0, OpCode::add, {3}, OpResult::of(true), 1));
  h.push_back(inv(0, OpCode::add, {5}, 2));
  h.push_back(res(0, OpCode::add, {5}, OpResult::of(true), 3));
  h.push_back(inv(0, OpCode::range, {2, 6}, 4));
  h.push_back(res(0, OpCode::range, {2, 6}, OpResult::of(std::vector<Key>{3, 5}), 5));
  CHECK(check_linearizable(h).verdict == Verdict::linearizable);

  h[5].result = OpResult::of(std::vector<Key>{3});
  auto r = check_linearizable(h);
  CHECK(r.verdict == Verdict::not_linearizable);
}

TEST_CASE("lincheck reports inconclusive when the budget runs out") {
  History h;
  for (int t = 0; t < 6; ++t) h.push_back(inv(t, OpCode::add, {t}, t));
  for (int t = 0; t < 6; ++t)
    h.push_back(res(t, OpCode::add, {t}, OpResult::of(true), 6 + t));
  LincheckOptions opts;
  opts.max_expansions = 3;
  auto r = check_linearizable(h, opts);
  CHECK(r.verdict == Verdict::inconclusive);
  CHECK_FALSE(r.detail.empty());
}

TEST_CASE("lincheck rejects malformed histories up front") {
  History h;
  h.push_back(res(0, OpCode::add, {1}, OpResult::of(true), 0));
  CHECK_THROWS_AS(check_linearizable(h), std::invalid_argument);
}

TEST_CASE("single-threaded stress histories replay sequentially") {
  WorkloadConfig cfg;
  cfg.threads = 1;
  cfg.ops_per_thread = 1000;
  cfg.key_lo = 0;
  cfg.key_hi = 7;
  cfg.seed = 31;
  StressReport rep = run_stress(cfg);
  CHECK(rep.completed_ops == 1000);
  CHECK_FALSE(rep.watchdog_fired);
  CHECK(history_issues(rep.history).empty());
  auto r = check_linearizable(rep.history);
  CHECK(r.verdict == Verdict::linearizable);
}

TEST_CASE("small concurrent stress run: well-formed history, audit clean, linearizable") {
  WorkloadConfig cfg;
  cfg.threads = 4;
  cfg.ops_per_thread = 50;
  cfg.key_lo = 0;
  cfg.key_hi = 7;
  cfg.seed = 77;
  StressOptions opts;
  opts.audit_versions = true;
  StressReport rep = run_stress(cfg, opts);
  CHECK(rep.completed_ops == 200);
  CHECK_FALSE(rep.watchdog_fired);
  CHECK(history_issues(rep.history).empty());
  CAPTURE(rep.audit_issues);
  CHECK(rep.audit_issues.empty());
  auto r = check_linearizable(rep.history);
  CHECK(r.verdict == Verdict::linearizable);
}

TEST_CASE("disjoint key windows run without any helping") {
  DisjointStressConfig cfg;
  cfg.threads = 4;
  cfg.ops_per_thread = 500;
  cfg.seed = 5;
  StressOptions opts;
  opts.record_history = false;
  StressReport rep = run_disjoint_stress(cfg, opts);
  CHECK(rep.completed_ops == 2000);
  CHECK(rep.helps_other == 0);
}
