// SPDX-License-Identifier: MIT
//
// Deterministic stepper: priming, stepping, record/replay, schedule
// serialization, suspension, and the invariant checker battery on both
// random and directed interleavings.

#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "versiontree/harness/invariants.hpp"
#include "versiontree/harness/lincheck.hpp"
#include "versiontree/harness/stepper.hpp"
#include "versiontree/harness/workload.hpp"
#include "versiontree/versiontree.hpp"

using namespace versiontree;
using namespace versiontree::harness;

namespace {

PlannedOp op_add(Key k) { return PlannedOp{OpCode::add, {k}}; }
PlannedOp op_rm(Key k) { return PlannedOp{OpCode::remove, {k}}; }
PlannedOp op_has(Key k) { return PlannedOp{OpCode::contains, {k}}; }
PlannedOp op_range(Key a, Key b) { return PlannedOp{OpCode::range, {a, b}}; }

using Script = std::vector<PlannedOp>;

std::unique_ptr<Stepper> make_script_stepper(const std::vector<Script>& scripts) {
  auto s = std::make_unique<Stepper>();
  for (const Script& ops : scripts)
    s->add_thread([sp = s.get(), ops] {
      for (const PlannedOp& op : ops) sp->run_op(op);
    });
  return s;
}

std::vector<OpResult> respond_results(const History& h) {
  std::vector<OpResult> out;
  for (const HistoryEvent& e : h)
    if (e.kind == HistoryEvent::Kind::respond) out.push_back(*e.result);
  return out;
}

std::vector<Key> scan_result(const History& h) {
  for (const HistoryEvent& e : h)
    if (e.kind == HistoryEvent::Kind::respond && e.op == OpCode::range) return e.result->keys;
  FAIL("history has no completed range operation");
  return {};
}

/// Steps tid until it has just executed the given (routine, step) label.
void drive_through(Stepper& s, int tid, Routine r, Step st) {
  while (s.has_pending(tid)) {
    const StepPoint& pt = s.pending(tid);
    bool target = pt.routine == r && pt.step == st;
    s.step(tid);
    if (target) return;
  }
  FAIL("thread finished without reaching " +
       schedule_entry_label(ScheduleEntry{tid, r, st}));
}

void require_checkers_clean(const StandardCheckers& checkers) {
  for (const std::string& v : checkers.all_violations()) INFO(v);
  REQUIRE(checkers.ok());
}

void require_linearizable(const History& h) {
  LincheckResult res = check_linearizable(h);
  INFO(res.detail);
  REQUIRE(res.verdict == Verdict::linearizable);
}

std::vector<InfoState> descriptor_states(const Tree& t) {
  std::vector<InfoState> out;
  t.arena().for_each_info([&](const InfoObject& i) { out.push_back(i.state.load()); });
  return out;
}

}  // namespace

TEST_CASE("a single stepped thread completes with a faithful history") {
  auto s = make_script_stepper({{op_add(5), op_has(5), op_rm(5), op_has(5)}});
  REQUIRE(s->thread_count() == 1);
  REQUIRE(s->has_pending(0));
  REQUIRE(s->pending(0).routine == Routine::harness);
  REQUIRE(s->pending(0).step == Step::invoke);

  REQUIRE(s->run_round_robin());
  s->rethrow_any_failure();
  s->finish();

  const History& h = s->history();
  REQUIRE(history_issues(h).empty());
  REQUIRE(h.size() == 8);
  REQUIRE(respond_results(h) ==
          std::vector<OpResult>{OpResult::of(true), OpResult::of(true), OpResult::of(true),
                                OpResult::of(false)});
  require_linearizable(h);

  VersionTree vt = reconstruct_version_tree(s->tree(), s->tree().counter().value.load());
  REQUIRE(inspect::audit_leaf_oriented_bst(vt).ok);
  REQUIRE(inspect::collect_keys(vt).empty());
}

TEST_CASE("equal seeds produce identical schedules, histories and trees") {
  const std::vector<Script> scripts = {
      {op_add(1), op_range(0, 6), op_rm(1)},
      {op_add(2), op_add(1), op_has(2)},
      {op_range(1, 4), op_add(3)},
  };
  auto a = make_script_stepper(scripts);
  auto b = make_script_stepper(scripts);
  StepperSchedule sa = a->run_random(42);
  StepperSchedule sb = b->run_random(42);
  a->rethrow_any_failure();
  b->rethrow_any_failure();
  REQUIRE(a->all_finished());
  REQUIRE(b->all_finished());
  REQUIRE(sa == sb);
  REQUIRE(a->executed() == b->executed());
  REQUIRE(a->history() == b->history());
  REQUIRE(a->tree_hash() == b->tree_hash());
}

TEST_CASE("a recorded schedule replays to the same history and tree") {
  const std::vector<Script> scripts = {
      {op_add(4), op_rm(2), op_range(0, 9)},
      {op_add(2), op_has(4)},
  };
  auto a = make_script_stepper(scripts);
  StepperSchedule recorded = a->run_random(2026);
  a->rethrow_any_failure();
  REQUIRE(a->all_finished());

  auto b = make_script_stepper(scripts);
  b->run_schedule(recorded);
  b->rethrow_any_failure();
  REQUIRE(b->all_finished());
  REQUIRE(b->executed() == recorded);
  REQUIRE(b->history() == a->history());
  REQUIRE(b->tree_hash() == a->tree_hash());
}

TEST_CASE("schedules serialize to text and parse back") {
  auto a = make_script_stepper({{op_add(1)}, {op_has(1)}});
  StepperSchedule recorded = a->run_random(7);
  a->rethrow_any_failure();

  std::string text = serialize_schedule(recorded);
  std::istringstream is(text);
  REQUIRE(parse_schedule(is) == recorded);

  SECTION("labels are thread plus routine.step") {
    REQUIRE(schedule_entry_label({0, Routine::harness, Step::invoke}) == "0 harness.invoke");
    REQUIRE(schedule_entry_label({3, Routine::find, Step::find_counter_load}) ==
            "3 find.find_counter_load");
  }

  SECTION("blank lines are ignored") {
    std::istringstream blanky("\n0 harness.invoke\n\n1 harness.invoke\n");
    REQUIRE(parse_schedule(blanky).size() == 2);
  }

  SECTION("malformed lines are rejected") {
    std::istringstream no_num("x harness.invoke\n");
    REQUIRE_THROWS_AS(parse_schedule(no_num), std::invalid_argument);
    std::istringstream no_dot("0 harness\n");
    REQUIRE_THROWS_AS(parse_schedule(no_dot), std::invalid_argument);
    std::istringstream bad_routine("0 bogus.invoke\n");
    REQUIRE_THROWS_AS(parse_schedule(bad_routine), std::invalid_argument);
    std::istringstream bad_step("0 harness.bogus\n");
    REQUIRE_THROWS_AS(parse_schedule(bad_step), std::invalid_argument);
  }
}

TEST_CASE("replay refuses a schedule that disagrees with the pending step") {
  auto s = make_script_stepper({{op_add(1)}});
  StepperSchedule wrong = {{0, Routine::help, Step::help_commit_write}};
  REQUIRE_THROWS_AS(s->run_schedule(wrong), std::logic_error);

  StepperSchedule no_thread = {{5, Routine::harness, Step::invoke}};
  auto s2 = make_script_stepper({{op_add(1)}});
  REQUIRE_THROWS_AS(s2->run_schedule(no_thread), std::logic_error);
}

TEST_CASE("driver-side inspection guards misuse") {
  auto s = make_script_stepper({{op_has(1)}});
  SECTION("stepping a suspended thread throws") {
    s->suspend(0);
    REQUIRE_THROWS_AS(s->step(0), std::logic_error);
    s->resume(0);
    REQUIRE_NOTHROW(s->step(0));
  }
  SECTION("a finished thread has no pending step") {
    while (s->has_pending(0)) s->step(0);
    REQUIRE(s->finished(0));
    REQUIRE_THROWS_AS(s->pending(0), std::logic_error);
    REQUIRE_THROWS_AS(s->step(0), std::logic_error);
  }
  SECTION("unknown thread ids throw") {
    REQUIRE_THROWS_AS(s->step(9), std::out_of_range);
  }
}

TEST_CASE("invariant checkers accept random interleavings") {
  const std::vector<Script> scripts = {
      {op_add(1), op_add(3), op_range(0, 4), op_rm(1)},
      {op_add(2), op_rm(3), op_has(1)},
      {op_range(1, 3), op_add(1), op_has(2)},
  };
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    DYNAMIC_SECTION("seed " << seed) {
      auto s = make_script_stepper(scripts);
      StandardCheckers checkers;
      checkers.attach(*s);
      s->run_random(seed);
      s->rethrow_any_failure();
      REQUIRE(s->all_finished());
      s->finish();
      require_checkers_clean(checkers);
      require_linearizable(s->history());

      std::uint64_t top = s->tree().counter().value.load();
      for (std::uint64_t i = 0; i <= top; ++i) {
        inspect::AuditReport rep =
            inspect::audit_leaf_oriented_bst(inspect::materialize_version(s->tree(), i));
        for (const std::string& issue : rep.issues) INFO("T_" << i << ": " << issue);
        REQUIRE(rep.ok);
      }
    }
  }
}

TEST_CASE("a suspended updater never blocks the other threads") {
  auto s = make_script_stepper({
      {op_add(5)},
      {op_add(3)},
      {op_has(5), op_has(3)},
  });
  StandardCheckers checkers;
  checkers.attach(*s);

  // Park thread 0 right after it publishes its descriptor, then let the
  // rest of the system run. Anyone who bumps into the frozen node finishes
  // the stalled insert on thread 0's behalf.
  drive_through(*s, 0, Routine::execute, Step::exec_freeze_cas);
  s->suspend(0);
  s->run_random(11);
  REQUIRE(s->finished(1));
  REQUIRE(s->finished(2));
  REQUIRE_FALSE(s->all_finished());
  REQUIRE(s->quiesced_or_suspended());

  s->resume(0);
  s->run_random(12);
  s->rethrow_any_failure();
  REQUIRE(s->all_finished());
  s->finish();

  require_checkers_clean(checkers);
  require_linearizable(s->history());
  std::uint64_t top = s->tree().counter().value.load();
  REQUIRE(inspect::collect_keys(inspect::materialize_version(s->tree(), top)) ==
          std::vector<Key>{3, 5});
}

TEST_CASE("a scan overtaking a pre-handshake insert aborts it") {
  auto s = make_script_stepper({
      {op_add(1)},
      {op_range(0, 9)},
  });
  StandardCheckers checkers;
  checkers.attach(*s);

  // Thread 0 publishes its descriptor (state still bottom) and parks before
  // the handshake counter read.
  drive_through(*s, 0, Routine::execute, Step::exec_freeze_cas);
  REQUIRE(s->pending(0).step == Step::help_counter_load);

  // The scan opens a new phase, meets the frozen root, and aborts the
  // descriptor: its snapshot must not contain the insert.
  while (s->has_pending(1)) s->step(1);
  REQUIRE(s->finished(1));
  REQUIRE(scan_result(s->history()).empty());

  while (s->has_pending(0)) s->step(0);
  s->rethrow_any_failure();
  REQUIRE(s->all_finished());
  s->finish();

  // dummy, the aborted first attempt, then the committed retry.
  REQUIRE(descriptor_states(s->tree()) ==
          std::vector<InfoState>{InfoState::abort, InfoState::abort, InfoState::commit});
  require_checkers_clean(checkers);
  require_linearizable(s->history());
  REQUIRE(respond_results(s->history()).back() == OpResult::of(true));
  REQUIRE(inspect::collect_keys(inspect::materialize_version(s->tree(), 0)).empty());
  REQUIRE(inspect::collect_keys(inspect::materialize_version(s->tree(), 1)) ==
          std::vector<Key>{1});
}

TEST_CASE("a scan completes a post-handshake insert and includes its key") {
  auto s = make_script_stepper({
      {op_add(1)},
      {op_range(0, 9)},
  });
  StandardCheckers checkers;
  checkers.attach(*s);

  // Thread 0 gets past the handshake: state is now try, so the insert is
  // committed territory and every later scan must carry it to completion.
  drive_through(*s, 0, Routine::help, Step::help_try_cas);
  s->suspend(0);

  while (s->has_pending(1)) s->step(1);
  REQUIRE(s->finished(1));
  REQUIRE(scan_result(s->history()) == std::vector<Key>{1});

  s->resume(0);
  while (s->has_pending(0)) s->step(0);
  s->rethrow_any_failure();
  REQUIRE(s->all_finished());
  s->finish();

  // dummy plus the single committed descriptor: no retry was needed.
  REQUIRE(descriptor_states(s->tree()) ==
          std::vector<InfoState>{InfoState::abort, InfoState::commit});
  require_checkers_clean(checkers);
  require_linearizable(s->history());
  REQUIRE(inspect::collect_keys(inspect::materialize_version(s->tree(), 0)) ==
          std::vector<Key>{1});
}

TEST_CASE("scan step counts stay within the wait-free bound") {
  auto s = make_script_stepper({
      {op_add(1), op_add(2), op_add(3), op_add(4), op_range(0, 9)},
  });
  OpStepCounter counter(0);
  s->add_observer(&counter);
  REQUIRE(s->run_round_robin());
  s->rethrow_any_failure();
  REQUIRE(scan_result(s->history()) == std::vector<Key>{1, 2, 3, 4});

  std::uint64_t top = s->tree().counter().value.load();
  std::uint64_t n = inspect::materialize_version(s->tree(), top).size();
  // No suspended updaters in this run, so the bound is 6N + H + 16.
  REQUIRE(counter.steps() <= 6 * n + counter.hops() + 16);
}
