// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_HARNESS_STEPPER_HPP
#define VERSIONTREE_HARNESS_STEPPER_HPP

/// \file
/// Deterministic execution stepper. Logical threads run as cooperative
/// fibers; every shared-memory access in the library is a scheduling point
/// (via the instrumentation hook), and the controller decides which thread
/// performs its next access. Between steps the world is provably paused, so
/// invariant observers may walk all of memory.
///
/// A thread's history events (invoke/respond) go through the same
/// discipline as shared accesses: they are steps on a synthetic recorder
/// cell, which makes the recorded real-time order part of the schedule.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "../inspect.hpp"
#include "../tree.hpp"
#include "fiber.hpp"
#include "history.hpp"
#include "workload.hpp"

namespace versiontree::harness {

struct ScheduleEntry {
  int thread = 0;
  Routine routine = Routine::harness;
  Step step = Step::invoke;

  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

using StepperSchedule = std::vector<ScheduleEntry>;

inline std::string schedule_entry_label(const ScheduleEntry& e) {
  std::ostringstream os;
  os << e.thread << " " << routine_name(e.routine) << "." << step_name(e.step);
  return os.str();
}

/// One entry per line: "<thread> <routine>.<step>".
inline std::string serialize_schedule(const StepperSchedule& s) {
  std::string out;
  for (const ScheduleEntry& e : s) {
    out += schedule_entry_label(e);
    out += "\n";
  }
  return out;
}

inline std::optional<Routine> routine_from_name(const std::string& name) {
  for (int i = 0; i < kRoutineCount; ++i)
    if (name == routine_name(static_cast<Routine>(i))) return static_cast<Routine>(i);
  return std::nullopt;
}

inline std::optional<Step> step_from_name(const std::string& name) {
  for (int i = 0; i < kStepCount; ++i)
    if (name == step_name(static_cast<Step>(i))) return static_cast<Step>(i);
  return std::nullopt;
}

inline StepperSchedule parse_schedule(std::istream& is) {
  StepperSchedule out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    int tid = -1;
    std::string label;
    if (!(ls >> tid >> label))
      throw std::invalid_argument("schedule line " + std::to_string(lineno) + " malformed");
    auto dot = label.find('.');
    if (dot == std::string::npos)
      throw std::invalid_argument("schedule line " + std::to_string(lineno) +
                                  " lacks routine.step");
    auto routine = routine_from_name(label.substr(0, dot));
    auto step = step_from_name(label.substr(dot + 1));
    if (!routine || !step)
      throw std::invalid_argument("schedule line " + std::to_string(lineno) +
                                  " has an unknown label: " + label);
    out.push_back(ScheduleEntry{tid, *routine, *step});
  }
  return out;
}

class Stepper;

/// Invariant checkers implement this and register with the stepper. The
/// callbacks run with every logical thread paused.
class StepObserver {
 public:
  virtual ~StepObserver() = default;
  virtual void before(Stepper&, const StepPoint&) {}
  virtual void after(Stepper&, const StepPoint&, const StepResult&) {}
  virtual void help_event(Stepper&, int /*thread*/, const InfoObject&, HelpReason) {}
  virtual void prev_hop(Stepper&, int /*thread*/, const NodeBase& /*from*/,
                        const NodeBase& /*to*/) {}
  virtual void node_created(Stepper&, int /*thread*/, const NodeBase&) {}
  virtual void info_created(Stepper&, int /*thread*/, const InfoObject&) {}
  virtual void search_visit(Stepper&, int /*thread*/, Key, std::uint64_t /*seq*/,
                            const NodeBase&) {}
  virtual void validate_event(Stepper&, int /*thread*/, bool /*validated*/, Key /*k*/,
                              const NodeBase* /*gp*/, const NodeBase* /*p*/,
                              const NodeBase* /*l*/) {}
  virtual void at_end(Stepper&) {}
};

class Stepper {
 public:
  explicit Stepper(std::size_t stack_bytes = 128 * 1024)
      : stack_bytes_(stack_bytes), hooks_(this) {
    tree_ = std::make_unique<Tree>(&hooks_);
  }

  Stepper(const Stepper&) = delete;
  Stepper& operator=(const Stepper&) = delete;

  Tree& tree() noexcept { return *tree_; }
  const Tree& tree() const noexcept { return *tree_; }

  void add_observer(StepObserver* obs) { observers_.push_back(obs); }

  /// Registers a logical thread and runs it up to its first scheduling
  /// point. Bodies run on a fiber and may only touch the tree and the
  /// stepper's fiber-side helpers.
  int add_thread(std::function<void()> body) {
    int tid = static_cast<int>(fibers_.size());
    fibers_.push_back(std::make_unique<Fiber>());
    Fiber& f = *fibers_.back();
    f.id = tid;
    f.body = std::move(body);
    f.stack.resize(stack_bytes_);
    f.ctx.prepare(f.stack.data(), f.stack.size(), &Stepper::trampoline);
    resume_fiber(f);  // prime: run to the first scheduling point
    return tid;
  }

  // ---- driver-side state inspection ------------------------------------

  int thread_count() const noexcept { return static_cast<int>(fibers_.size()); }
  bool finished(int tid) const { return fiber(tid).done; }
  bool suspended(int tid) const { return fiber(tid).suspended; }
  bool has_pending(int tid) const { return !fiber(tid).done && fiber(tid).parked; }

  const StepPoint& pending(int tid) const {
    const Fiber& f = fiber(tid);
    if (f.done || !f.parked) throw std::logic_error("thread has no pending step");
    return f.pending;
  }

  /// Stable logical id of an atomic cell. Ids are assigned in park order,
  /// which the schedule determines, so replaying a schedule prefix on a
  /// fresh stepper assigns the same ids to the corresponding cells even
  /// though their addresses differ. Cells never seen at a scheduling point
  /// have no id; asking for one registers it.
  int cell_id(const void* cell) {
    auto it = cell_ids_.find(cell);
    if (it != cell_ids_.end()) return it->second;
    int id = static_cast<int>(cell_ids_.size());
    cell_ids_.emplace(cell, id);
    return id;
  }

  /// Threads that can be stepped right now.
  std::vector<int> runnable() const {
    std::vector<int> out;
    for (const auto& f : fibers_)
      if (!f->done && !f->suspended && f->parked) out.push_back(f->id);
    return out;
  }

  void suspend(int tid) { fiber(tid).suspended = true; }
  void resume(int tid) { fiber(tid).suspended = false; }

  bool all_finished() const {
    for (const auto& f : fibers_)
      if (!f->done) return false;
    return true;
  }

  /// All threads either finished or (permanently) suspended.
  bool quiesced_or_suspended() const {
    for (const auto& f : fibers_)
      if (!f->done && !f->suspended) return false;
    return true;
  }

  // ---- stepping ---------------------------------------------------------

  /// Executes tid's pending shared access and advances it to its next
  /// scheduling point (or completion). Returns the label executed.
  ScheduleEntry step(int tid) {
    Fiber& f = fiber(tid);
    if (f.done || !f.parked) throw std::logic_error("stepping a thread with no pending step");
    if (f.suspended) throw std::logic_error("stepping a suspended thread");
    ScheduleEntry entry{tid, f.pending.routine, f.pending.step};
    for (StepObserver* o : observers_) o->before(*this, f.pending);
    f.parked = false;
    resume_fiber(f);
    executed_.push_back(entry);
    return entry;
  }

  /// Uniform random driver. Returns the executed schedule for replay.
  StepperSchedule run_random(std::uint64_t seed) {
    std::uint64_t state = seed ? seed : 0x6a09e667f3bcc909ull;
    auto next = [&state] {
      // xorshift64*: deterministic and stable across platforms.
      state ^= state >> 12;
      state ^= state << 25;
      state ^= state >> 27;
      return state * 0x2545f4914f6cdd1dull;
    };
    StepperSchedule out;
    while (true) {
      std::vector<int> r = runnable();
      if (r.empty()) break;
      out.push_back(step(r[next() % r.size()]));
    }
    return out;
  }

  /// Replays a recorded schedule, validating each choice against the
  /// pending step it is about to execute.
  void run_schedule(const StepperSchedule& schedule) {
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      const ScheduleEntry& e = schedule[i];
      if (!has_pending(e.thread) || suspended(e.thread))
        throw std::logic_error("schedule entry " + std::to_string(i) + " (" +
                               schedule_entry_label(e) + "): thread not runnable");
      const StepPoint& pt = pending(e.thread);
      if (pt.routine != e.routine || pt.step != e.step)
        throw std::logic_error("schedule entry " + std::to_string(i) + ": expected " +
                               schedule_entry_label(e) + ", thread is at " +
                               schedule_entry_label({e.thread, pt.routine, pt.step}));
      step(e.thread);
    }
  }

  /// Round-robin until nothing is runnable. True iff every thread finished.
  bool run_round_robin() {
    while (true) {
      std::vector<int> r = runnable();
      if (r.empty()) break;
      for (int tid : r)
        if (has_pending(tid) && !suspended(tid)) step(tid);
    }
    return all_finished();
  }

  /// Signals observers that the run is over (for end-of-run checks).
  void finish() {
    for (StepObserver* o : observers_) o->at_end(*this);
  }

  // ---- results ----------------------------------------------------------

  const History& history() const noexcept { return history_; }
  const StepperSchedule& executed() const noexcept { return executed_; }
  std::uint64_t steps_executed() const noexcept { return executed_.size(); }

  void rethrow_any_failure() const {
    for (const auto& f : fibers_)
      if (f->error) std::rethrow_exception(f->error);
  }

  /// Structure-only fingerprint of the final tree (every phase), stable
  /// across runs of the same schedule (no addresses involved).
  std::uint64_t tree_hash() {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    std::uint64_t top = tree_->counter().value.load();
    for (std::uint64_t i = 0; i <= top; ++i)
      mix(inspect::shape_hash(inspect::materialize_version(*tree_, i)));
    mix(top);
    mix(tree_->arena().node_count());
    mix(tree_->arena().info_count());
    return h;
  }

  // ---- fiber-side helpers (called from thread bodies) --------------------

  /// Records an invoke event; one scheduling point on the recorder cell.
  void record_invoke(OpCode op, std::vector<Key> args) {
    Fiber& f = current();
    f.open_op = op;
    f.open_args = args;
    StepPoint pt{f.id, Routine::harness, Step::invoke, StepKind::store, &recorder_cell_,
                 CellKind::recorder, nullptr};
    hooks_.before_step(pt);
    HistoryEvent e;
    e.kind = HistoryEvent::Kind::invoke;
    e.thread = f.id;
    e.op = op;
    e.args = std::move(args);
    e.index = recorder_cell_++;
    history_.push_back(e);
    hooks_.after_step(pt, StepResult{0, e.index, false});
  }

  /// Records the response for the thread's open operation; one scheduling
  /// point on the recorder cell.
  void record_respond(OpResult result) {
    Fiber& f = current();
    StepPoint pt{f.id, Routine::harness, Step::respond, StepKind::store, &recorder_cell_,
                 CellKind::recorder, nullptr};
    hooks_.before_step(pt);
    HistoryEvent e;
    e.kind = HistoryEvent::Kind::respond;
    e.thread = f.id;
    e.op = f.open_op;
    e.args = f.open_args;
    e.result = std::move(result);
    e.index = recorder_cell_++;
    history_.push_back(e);
    hooks_.after_step(pt, StepResult{0, e.index, false});
  }

  /// Runs one facade-equivalent operation with history recording.
  void run_op(const PlannedOp& op) {
    record_invoke(op.code, op.args);
    OpResult r;
    switch (op.code) {
      case OpCode::contains: r = OpResult::of(tree_->find(op.args[0]) != nullptr); break;
      case OpCode::add: r = OpResult::of(tree_->insert(op.args[0])); break;
      case OpCode::remove: r = OpResult::of(tree_->delete_key(op.args[0])); break;
      case OpCode::range: r = OpResult::of(tree_->range_scan(op.args[0], op.args[1])); break;
    }
    record_respond(std::move(r));
  }

 private:
  struct Fiber {
    int id = -1;
    FiberContext ctx;
    std::vector<char> stack;
    std::function<void()> body;
    bool started = false;
    bool done = false;
    bool parked = false;
    bool suspended = false;
    StepPoint pending{};
    std::exception_ptr error;
    OpCode open_op = OpCode::contains;
    std::vector<Key> open_args;
  };

  /// The ExecutionHooks the tree sees: park on before, notify on after.
  class Hooks final : public ExecutionHooks {
   public:
    explicit Hooks(Stepper* s) : s_(s) {}

    void before_step(const StepPoint& pt) override { s_->park(pt); }

    void after_step(const StepPoint& pt, const StepResult& r) override {
      for (StepObserver* o : s_->observers_) o->after(*s_, pt, r);
    }

    void on_help(int t, const InfoObject& i, HelpReason r) override {
      for (StepObserver* o : s_->observers_) o->help_event(*s_, t, i, r);
    }

    void on_prev_hop(int t, const NodeBase& from, const NodeBase& to) override {
      for (StepObserver* o : s_->observers_) o->prev_hop(*s_, t, from, to);
    }

    void on_node_created(int t, const NodeBase& n) override {
      for (StepObserver* o : s_->observers_) o->node_created(*s_, t, n);
    }

    void on_info_created(int t, const InfoObject& i) override {
      for (StepObserver* o : s_->observers_) o->info_created(*s_, t, i);
    }

    void on_search_visit(int t, Key k, std::uint64_t seq, const NodeBase& n) override {
      for (StepObserver* o : s_->observers_) o->search_visit(*s_, t, k, seq, n);
    }

    void on_validate_leaf(int t, bool ok, Key k, const NodeBase* gp, const NodeBase* p,
                          const NodeBase* l) override {
      for (StepObserver* o : s_->observers_) o->validate_event(*s_, t, ok, k, gp, p, l);
    }

   private:
    Stepper* s_;
  };

  static void trampoline() {
    Stepper* s = tls_self();
    Fiber& f = *s->fibers_[static_cast<std::size_t>(s->starting_)];
    try {
      f.body();
    } catch (...) {
      f.error = std::current_exception();
    }
    f.done = true;
    // A finished fiber yields to the controller and is never resumed; the
    // loop guards against a stray resume.
    for (;;) FiberContext::switch_to(f.ctx, s->main_ctx_);
  }

  static Stepper*& tls_self() {
    static thread_local Stepper* self = nullptr;
    return self;
  }

  Fiber& fiber(int tid) { return *fibers_.at(static_cast<std::size_t>(tid)); }
  const Fiber& fiber(int tid) const { return *fibers_.at(static_cast<std::size_t>(tid)); }

  Fiber& current() {
    if (active_ < 0) throw std::logic_error("fiber-side call outside any fiber");
    return fiber(active_);
  }

  /// Fiber side: record the pending step and yield to the controller.
  void park(const StepPoint& pt) {
    Fiber& f = current();
    f.pending = pt;
    f.parked = true;
    cell_id(pt.cell);  // deterministic id assignment, in park order
    FiberContext::switch_to(f.ctx, main_ctx_);
    // resumed: the controller chose this thread; fall through and perform
    // the access.
  }

  /// Controller side: transfer control into a fiber until it parks or ends.
  void resume_fiber(Fiber& f) {
    Stepper* prev_self = tls_self();
    tls_self() = this;
    int prev_active = active_;
    active_ = f.id;
    int prev_tid = this_thread_id();
    this_thread_id() = f.id;
    if (!f.started) {
      f.started = true;
      starting_ = f.id;
    }
    FiberContext::switch_to(main_ctx_, f.ctx);
    this_thread_id() = prev_tid;
    active_ = prev_active;
    tls_self() = prev_self;
  }

  std::size_t stack_bytes_;
  Hooks hooks_;
  std::unique_ptr<Tree> tree_;
  std::vector<std::unique_ptr<Fiber>> fibers_;
  std::vector<StepObserver*> observers_;
  FiberContext main_ctx_;
  int active_ = -1;
  int starting_ = -1;
  std::uint64_t recorder_cell_ = 0;  // doubles as the next history index
  std::unordered_map<const void*, int> cell_ids_;
  History history_;
  StepperSchedule executed_;
};

}  // namespace versiontree::harness

#endif  // VERSIONTREE_HARNESS_STEPPER_HPP
