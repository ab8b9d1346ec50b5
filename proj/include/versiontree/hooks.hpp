// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_HOOKS_HPP
#define VERSIONTREE_HOOKS_HPP

#include <cstdint>

#include "key.hpp"

namespace versiontree {

class InfoObject;
struct NodeBase;

/// Identifies the library routine performing a shared-memory step.
enum class Routine : std::uint8_t {
  init,
  read_child,
  search,
  validate_link,
  validate_leaf,
  find,
  cas_child,
  execute,
  help,
  insert,
  delete_key,
  range_scan,
  scan_helper,
  harness,
};

/// One label per shared-memory access site in the library, plus the two
/// harness recorder labels. A label names a static program location, so a
/// (thread, label) pair identifies a step in a schedule unambiguously.
enum class Step : std::uint8_t {
  // read_child
  rc_child_load,
  // validate_link
  vl_update_load,
  vl_frozen_state_load,
  vl_child_load,
  // validate_leaf re-reads
  vleaf_reread_p,
  vleaf_reread_gp,
  // find
  find_counter_load,
  // cas_child
  cc_child_cas,
  // execute
  exec_frozen_state_load,
  exec_recheck_state_load,
  exec_freeze_cas,
  // help
  help_counter_load,
  help_abort_cas,
  help_try_cas,
  help_continue_state_load,
  help_freeze_cas,
  help_verify_load,
  help_commit_write,
  help_fail_state_load,
  help_abort_write,
  help_return_state_load,
  // insert
  ins_counter_load,
  ins_lupdate_load,
  // delete
  del_counter_load,
  del_lupdate_load,
  del_supdate_load,
  del_copy_left_load,
  del_copy_right_load,
  // range_scan
  scan_counter_load,
  scan_counter_inc,
  // scan_helper
  sh_update_load,
  sh_state_load,
  // harness history recorder events
  invoke,
  respond,
};

/// Enum cardinalities, for tables indexed by Routine or Step.
inline constexpr int kRoutineCount = static_cast<int>(Routine::harness) + 1;
inline constexpr int kStepCount = static_cast<int>(Step::respond) + 1;

inline const char* routine_name(Routine r) noexcept {
  switch (r) {
    case Routine::init: return "init";
    case Routine::read_child: return "read_child";
    case Routine::search: return "search";
    case Routine::validate_link: return "validate_link";
    case Routine::validate_leaf: return "validate_leaf";
    case Routine::find: return "find";
    case Routine::cas_child: return "cas_child";
    case Routine::execute: return "execute";
    case Routine::help: return "help";
    case Routine::insert: return "insert";
    case Routine::delete_key: return "delete";
    case Routine::range_scan: return "range_scan";
    case Routine::scan_helper: return "scan_helper";
    case Routine::harness: return "harness";
  }
  return "?";
}

inline const char* step_name(Step s) noexcept {
  switch (s) {
    case Step::rc_child_load: return "rc_child_load";
    case Step::vl_update_load: return "vl_update_load";
    case Step::vl_frozen_state_load: return "vl_frozen_state_load";
    case Step::vl_child_load: return "vl_child_load";
    case Step::vleaf_reread_p: return "vleaf_reread_p";
    case Step::vleaf_reread_gp: return "vleaf_reread_gp";
    case Step::find_counter_load: return "find_counter_load";
    case Step::cc_child_cas: return "cc_child_cas";
    case Step::exec_frozen_state_load: return "exec_frozen_state_load";
    case Step::exec_recheck_state_load: return "exec_recheck_state_load";
    case Step::exec_freeze_cas: return "exec_freeze_cas";
    case Step::help_counter_load: return "help_counter_load";
    case Step::help_abort_cas: return "help_abort_cas";
    case Step::help_try_cas: return "help_try_cas";
    case Step::help_continue_state_load: return "help_continue_state_load";
    case Step::help_freeze_cas: return "help_freeze_cas";
    case Step::help_verify_load: return "help_verify_load";
    case Step::help_commit_write: return "help_commit_write";
    case Step::help_fail_state_load: return "help_fail_state_load";
    case Step::help_abort_write: return "help_abort_write";
    case Step::help_return_state_load: return "help_return_state_load";
    case Step::ins_counter_load: return "ins_counter_load";
    case Step::ins_lupdate_load: return "ins_lupdate_load";
    case Step::del_counter_load: return "del_counter_load";
    case Step::del_lupdate_load: return "del_lupdate_load";
    case Step::del_supdate_load: return "del_supdate_load";
    case Step::del_copy_left_load: return "del_copy_left_load";
    case Step::del_copy_right_load: return "del_copy_right_load";
    case Step::scan_counter_load: return "scan_counter_load";
    case Step::scan_counter_inc: return "scan_counter_inc";
    case Step::sh_update_load: return "sh_update_load";
    case Step::sh_state_load: return "sh_state_load";
    case Step::invoke: return "invoke";
    case Step::respond: return "respond";
  }
  return "?";
}

enum class StepKind : std::uint8_t { load, store, cas, fetch_inc };

enum class CellKind : std::uint8_t { child, update, state, counter, recorder };

/// Why a Help call was made. own_descriptor is the ordinary completion path
/// of execute on the descriptor it just installed; the other three are
/// genuine helping of a different operation's descriptor.
enum class HelpReason : std::uint8_t {
  own_descriptor,
  frozen_parent,
  frozen_witness,
  scan_encounter,
};

/// Description of a shared-memory step about to be performed.
struct StepPoint {
  int thread;
  Routine routine;
  Step step;
  StepKind kind;
  const void* cell;        // address identity of the accessed atomic cell
  CellKind cell_kind;
  const InfoObject* info;  // descriptor involved, if any (freeze, state, child CAS)
};

/// Outcome of a shared-memory step, reported right after it was performed.
/// Values are encoded as raw 64-bit payloads: pointer bits for child cells,
/// word bits for update cells, the enum value for state cells, the counter
/// value for the phase counter.
struct StepResult {
  std::uint64_t loaded = 0;  // value observed (load, cas, fetch_inc)
  std::uint64_t stored = 0;  // value written (store, successful cas, fetch_inc)
  bool cas_ok = false;
};

/// Instrumentation surface. before_step is invoked before every shared-cell
/// read, write or compare-and-set; after_step right after it, with the
/// observed values. The remaining callbacks report semantic events the
/// verification harness uses. All default to no-ops; a tree constructed
/// without hooks performs no callback work beyond a null check.
///
/// Implementations must not re-enter the library from any callback, and must
/// be thread-safe when the tree is driven by more than one OS thread.
class ExecutionHooks {
 public:
  virtual ~ExecutionHooks() = default;

  virtual void before_step(const StepPoint&) {}
  virtual void after_step(const StepPoint&, const StepResult&) {}

  virtual void on_help(int /*thread*/, const InfoObject& /*target*/, HelpReason) {}
  virtual void on_prev_hop(int /*thread*/, const NodeBase& /*from*/, const NodeBase& /*to*/) {}
  virtual void on_node_created(int /*thread*/, const NodeBase&) {}
  virtual void on_info_created(int /*thread*/, const InfoObject&) {}
  virtual void on_search_visit(int /*thread*/, Key /*k*/, std::uint64_t /*seq*/,
                               const NodeBase& /*visited*/) {}
  virtual void on_validate_leaf(int /*thread*/, bool /*validated*/, Key /*k*/,
                                const NodeBase* /*gp*/, const NodeBase* /*p*/,
                                const NodeBase* /*l*/) {}
};

/// Logical thread id used in StepPoint records. The harness assigns ids to
/// its workers; unregistered threads report -1.
inline int& this_thread_id() noexcept {
  thread_local int id = -1;
  return id;
}

}  // namespace versiontree

#endif  // VERSIONTREE_HOOKS_HPP
