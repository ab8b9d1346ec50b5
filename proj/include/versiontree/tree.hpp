// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_TREE_HPP
#define VERSIONTREE_TREE_HPP

/// \file
/// A persistent non-blocking leaf-oriented binary search tree with lock-free
/// insert, delete and find, and wait-free range scans over phase snapshots.
///
/// All set members live in leaves; internal keys only route searches. Every
/// update freezes the nodes it is about to affect by installing a (tag,
/// descriptor) word into their update cells with a CAS, then performs a single
/// child-pointer CAS, so any thread can finish or abort a stalled update from
/// its descriptor alone. Replaced nodes are never unlinked from history: the
/// replacement's prev field points at the node it supersedes, and a global
/// phase counter (bumped by every range scan) timestamps nodes, so following
/// prev pointers from a child cell down to the first node of phase <= i
/// reproduces the tree exactly as phase i saw it.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "arena.hpp"
#include "assert.hpp"
#include "hooks.hpp"
#include "key.hpp"
#include "node.hpp"

namespace versiontree {

/// Result of a branch traversal: the leaf reached, its parent, and its
/// grandparent. gp is null exactly when the leaf is a direct child of the
/// root; callers guard every gp use with a "p is the root" test.
struct SearchResult {
  Internal* gp = nullptr;
  Internal* p = nullptr;
  Leaf* l = nullptr;
};

/// Outcome of validating one parent->child link. The witness is the update
/// word read from the parent, present iff validation succeeded; it is the
/// expected value a later freeze CAS on that parent will use.
struct LinkValidation {
  bool validated = false;
  std::optional<UpdateWord> witness;
};

/// Outcome of validating the leaf returned by a search, including the
/// re-read confirmation of both witnesses.
struct LeafValidation {
  bool validated = false;
  std::optional<UpdateWord> gpupdate;
  std::optional<UpdateWord> pupdate;
};

/// Everything execute() needs to attempt an update: the nodes to freeze (in
/// order) with the update words witnessed for each, the subset to mark, and
/// the single child replacement. Mirrors the immutable part of InfoObject.
struct ExecutePlan {
  std::vector<NodeBase*> nodes;
  std::vector<UpdateWord> old_update;
  std::vector<NodeBase*> mark;
  Internal* par = nullptr;
  NodeBase* old_child = nullptr;
  NodeBase* new_child = nullptr;
  std::uint64_t seq = 0;
};

namespace detail {
inline bool frozen_predicate(UpdateTag tag, InfoState st) noexcept {
  if (tag == UpdateTag::flag) return st == InfoState::bottom || st == InfoState::try_;
  return st == InfoState::bottom || st == InfoState::try_ || st == InfoState::commit;
}
inline std::uint64_t ptr_bits(const void* p) noexcept {
  return static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(p));
}
}  // namespace detail

/// True iff the update word still protects its operation: a Flag freezes its
/// node while the descriptor is bottom or try; a Mark additionally keeps the
/// node frozen forever once the descriptor commits (the node is then
/// permanently removed from the current version). Reads the descriptor state
/// exactly once.
inline bool frozen(UpdateWord up) {
  VT_ASSERT(up.info() != nullptr);
  InfoState st = up.info()->state.load();
  return detail::frozen_predicate(up.tag(), st);
}

class Tree {
 public:
  /// Builds the empty tree: a root with key inf2 whose children are leaves
  /// inf1 and inf2, all unfrozen under the dummy descriptor (state abort),
  /// and the phase counter at 0.
  explicit Tree(ExecutionHooks* hooks = nullptr) : hooks_(hooks) {
    dummy_ = arena_.make_info();
    UpdateWord up = UpdateWord::make(UpdateTag::flag, dummy_);
    Leaf* l1 = arena_.make_node<Leaf>(kInf1, up, nullptr, 0);
    Leaf* l2 = arena_.make_node<Leaf>(kInf2, up, nullptr, 0);
    root_ = arena_.make_node<Internal>(kInf2, up, l1, l2, nullptr, 0);
    if (hooks_) {
      int t = this_thread_id();
      hooks_->on_info_created(t, *dummy_);
      hooks_->on_node_created(t, *l1);
      hooks_->on_node_created(t, *l2);
      hooks_->on_node_created(t, *root_);
    }
  }

  Tree(const Tree&) = delete;
  Tree& operator=(const Tree&) = delete;

  Internal* root() noexcept { return root_; }
  const Internal* root() const noexcept { return root_; }
  InfoObject* dummy() noexcept { return dummy_; }
  PhaseCounter& counter() noexcept { return counter_; }
  const PhaseCounter& counter() const noexcept { return counter_; }
  Arena& arena() noexcept { return arena_; }
  const Arena& arena() const noexcept { return arena_; }
  ExecutionHooks* hooks() const noexcept { return hooks_; }

  /// Number of public operations currently executing (used by test support
  /// that requires quiescence).
  int inflight() const noexcept { return inflight_.load(std::memory_order_relaxed); }

  /// Version-seq child of p: read the child cell once, then walk prev links
  /// until the first node of phase <= seq. The prev walk touches only
  /// immutable fields, so the single child load is the only shared step.
  NodeBase* read_child(Internal* p, bool go_left, std::uint64_t seq) {
    VT_ASSERT(p != nullptr && p->seq <= seq);
    NodeBase* l = load_child(p, go_left, Routine::read_child, Step::rc_child_load);
    while (l->seq > seq) {
      NodeBase* from = l;
      l = l->prev;
      VT_ASSERT(l != nullptr);
      if (hooks_) hooks_->on_prev_hop(this_thread_id(), *from, *l);
    }
    return l;
  }

  /// Descends from the root through version-seq children until a leaf,
  /// returning the last three nodes visited.
  SearchResult search(Key k, std::uint64_t seq) {
    Internal* gp = nullptr;
    Internal* p = nullptr;
    NodeBase* l = root_;
    if (hooks_) hooks_->on_search_visit(this_thread_id(), k, seq, *l);
    while (!l->is_leaf()) {
      gp = p;
      p = as_internal(l);
      l = read_child(p, k < p->key, seq);
      if (hooks_) hooks_->on_search_visit(this_thread_id(), k, seq, *l);
    }
    return SearchResult{gp, p, as_leaf(l)};
  }

  /// Checks that parent is unfrozen and still points at child on the given
  /// side. A frozen parent gets helped (once) and fails the validation; the
  /// caller retries from scratch.
  LinkValidation validate_link(Internal* parent, NodeBase* child, bool go_left) {
    VT_ASSERT(parent != nullptr && child != nullptr);
    UpdateWord up = load_update(parent, Routine::validate_link, Step::vl_update_load);
    if (frozen_step(up, Routine::validate_link, Step::vl_frozen_state_load)) {
      help(up.info(), HelpReason::frozen_parent);
      return LinkValidation{false, std::nullopt};
    }
    NodeBase* cur = load_child(parent, go_left, Routine::validate_link, Step::vl_child_load);
    if (cur != child) return LinkValidation{false, std::nullopt};
    return LinkValidation{true, up};
  }

  /// Validates the p->l link, then (unless p is the root) the gp->p link,
  /// then re-reads both update cells and requires them unchanged. A find or
  /// a failed update linearizes at the successful re-read: at that moment the
  /// leaf is in the current tree and no pending update can remove it.
  LeafValidation validate_leaf(Internal* gp, Internal* p, Leaf* l, Key k) {
    VT_ASSERT(p != nullptr && l != nullptr);
    VT_ASSERT(p == root_ || gp != nullptr);
    LeafValidation out;
    LinkValidation pv = validate_link(p, l, k < p->key);
    bool validated = pv.validated;
    out.pupdate = pv.witness;
    if (validated && p != root_) {
      LinkValidation gv = validate_link(gp, p, k < gp->key);
      validated = gv.validated;
      out.gpupdate = gv.witness;
    }
    if (validated)
      validated = load_update(p, Routine::validate_leaf, Step::vleaf_reread_p) == *out.pupdate;
    if (validated && p != root_)
      validated = load_update(gp, Routine::validate_leaf, Step::vleaf_reread_gp) == *out.gpupdate;
    out.validated = validated;
    if (hooks_) hooks_->on_validate_leaf(this_thread_id(), validated, k, gp, p, l);
    return out;
  }

  /// Returns the leaf holding k in the current tree, or null if k is absent.
  Leaf* find(Key k) {
    VT_ASSERT(is_real_key(k));
    OpGuard guard(this);
    while (true) {
      std::uint64_t seq = load_counter(Routine::find, Step::find_counter_load);
      SearchResult sr = search(k, seq);
      LeafValidation v = validate_leaf(sr.gp, sr.p, sr.l, k);
      if (v.validated) return sr.l->key == k ? sr.l : nullptr;
    }
  }

  /// Swings the side of parent selected by new_child's key from old_child to
  /// new_child. A failed CAS is silent: some other helper already performed
  /// or obsoleted the change. info attributes the step to a descriptor for
  /// instrumentation; it does not affect behavior.
  void cas_child(Internal* parent, NodeBase* old_child, NodeBase* new_child,
                 const InfoObject* info = nullptr) {
    VT_ASSERT(parent != nullptr && new_child != nullptr);
    VT_ASSERT(new_child->prev == old_child);
    bool to_left = new_child->key < parent->key;
    cas_child_cell(parent, to_left, old_child, new_child, Routine::cas_child,
                   Step::cc_child_cas, info);
  }

  /// Attempts an update described by plan. If any witnessed update word is
  /// (still) frozen, helps an in-progress owner once and gives up. Otherwise
  /// publishes a fresh descriptor by freezing nodes[0] with it (the freeze
  /// CAS that, if the update eventually succeeds, is its linearization
  /// point) and drives it with help(). True means the child CAS happened.
  bool execute(const ExecutePlan& plan) {
    VT_ASSERT(!plan.nodes.empty() && plan.nodes.size() == plan.old_update.size());
    for (NodeBase* n : plan.nodes) VT_ASSERT(n != nullptr);
    VT_ASSERT(plan.par != nullptr && plan.old_child != nullptr && plan.new_child != nullptr);
    VT_ASSERT(plan.old_child != plan.new_child);
    VT_ASSERT(plan.new_child->prev == plan.old_child);
    VT_ASSERT(contains_node(plan.nodes, plan.par));
    VT_ASSERT(contains_node(plan.mark, plan.old_child));
    for (NodeBase* m : plan.mark) VT_ASSERT(contains_node(plan.nodes, m));
    VT_ASSERT(plan.par != root_ || !is_real_key(plan.new_child->key));

    for (std::size_t i = 0; i < plan.old_update.size(); ++i) {
      UpdateWord ou = plan.old_update[i];
      if (frozen_step(ou, Routine::execute, Step::exec_frozen_state_load)) {
        InfoState st = load_state(ou.info(), Routine::execute, Step::exec_recheck_state_load);
        if (st == InfoState::bottom || st == InfoState::try_)
          help(ou.info(), HelpReason::frozen_witness);
        return false;
      }
    }
    InfoObject* infp = arena_.make_info(plan.nodes, plan.old_update, plan.mark, plan.par,
                                        plan.old_child, plan.new_child, plan.seq);
    if (hooks_) hooks_->on_info_created(this_thread_id(), *infp);
    if (cas_update(plan.nodes[0], plan.old_update[0],
                   UpdateWord::make(UpdateTag::flag, infp), Routine::execute,
                   Step::exec_freeze_cas, infp))
      return help(infp, HelpReason::own_descriptor);
    return false;
  }

  /// Drives a descriptor to a terminal state. Handshaking first: if the
  /// phase counter moved past the descriptor's phase, the update aborts
  /// pro-actively so the scan that opened the new phase cannot miss it.
  /// Otherwise freezes the remaining nodes in list order, verifying after
  /// each CAS that the cell holds this descriptor (installed by us or any
  /// other helper); if all held, performs the child CAS and commits.
  /// Idempotent under any number of concurrent helpers. Returns whether the
  /// descriptor (now or earlier) committed.
  bool help(InfoObject* infp, HelpReason reason = HelpReason::own_descriptor) {
    VT_ASSERT(infp != nullptr && infp != dummy_);
    if (hooks_) hooks_->on_help(this_thread_id(), *infp, reason);
    std::uint64_t c = load_counter(Routine::help, Step::help_counter_load);
    if (c != infp->seq)
      cas_state(infp, InfoState::bottom, InfoState::abort, Step::help_abort_cas);
    else
      cas_state(infp, InfoState::bottom, InfoState::try_, Step::help_try_cas);
    bool cont =
        load_state(infp, Routine::help, Step::help_continue_state_load) == InfoState::try_;
    // nodes[0] was frozen by the execute() that published the descriptor.
    std::size_t i = 1;
    while (cont && i < infp->nodes.size()) {
      NodeBase* n = infp->nodes[i];
      UpdateTag tag = infp->in_mark_list(n) ? UpdateTag::mark : UpdateTag::flag;
      cas_update(n, infp->old_update[i], UpdateWord::make(tag, infp), Routine::help,
                 Step::help_freeze_cas, infp);
      UpdateWord cur = load_update(n, Routine::help, Step::help_verify_load, infp);
      cont = (cur.info() == infp);
      ++i;
    }
    if (cont) {
      cas_child(infp->par, infp->old_child, infp->new_child, infp);
      store_state(infp, InfoState::commit, Step::help_commit_write);
    } else if (load_state(infp, Routine::help, Step::help_fail_state_load) == InfoState::try_) {
      store_state(infp, InfoState::abort, Step::help_abort_write);
    }
    return load_state(infp, Routine::help, Step::help_return_state_load) == InfoState::commit;
  }

  /// Adds k. Returns false if k was already present.
  bool insert(Key k) {
    VT_ASSERT(is_real_key(k));
    OpGuard guard(this);
    while (true) {
      std::uint64_t seq = load_counter(Routine::insert, Step::ins_counter_load);
      SearchResult sr = search(k, seq);
      LeafValidation v = validate_leaf(sr.gp, sr.p, sr.l, k);
      if (!v.validated) continue;
      if (sr.l->key == k) return false;  // duplicate key
      UpdateWord unfrozen = UpdateWord::make(UpdateTag::flag, dummy_);
      Leaf* fresh = arena_.make_node<Leaf>(k, unfrozen, nullptr, seq);
      Leaf* sibling = arena_.make_node<Leaf>(sr.l->key, unfrozen, nullptr, seq);
      // Replacement subtree: internal node keyed max(k, l->key), smaller key
      // on the left, prev pointing at the leaf it supersedes.
      Internal* replacement =
          k < sr.l->key
              ? arena_.make_node<Internal>(sr.l->key, unfrozen, fresh, sibling, sr.l, seq)
              : arena_.make_node<Internal>(k, unfrozen, sibling, fresh, sr.l, seq);
      if (hooks_) {
        int t = this_thread_id();
        hooks_->on_node_created(t, *fresh);
        hooks_->on_node_created(t, *sibling);
        hooks_->on_node_created(t, *replacement);
      }
      UpdateWord lupdate = load_update(sr.l, Routine::insert, Step::ins_lupdate_load);
      ExecutePlan plan;
      plan.nodes = {sr.p, sr.l};
      plan.old_update = {*v.pupdate, lupdate};
      plan.mark = {sr.l};
      plan.par = sr.p;
      plan.old_child = sr.l;
      plan.new_child = replacement;
      plan.seq = seq;
      if (execute(plan)) return true;
    }
  }

  /// Removes k. Returns false if k was absent. The leaf, its parent and the
  /// sibling all get frozen; the parent's spot under gp is taken by a fresh
  /// copy of the sibling (re-linking the existing sibling node would create
  /// cycles through prev, so a copy is mandatory).
  bool delete_key(Key k) {
    VT_ASSERT(is_real_key(k));
    OpGuard guard(this);
    while (true) {
      std::uint64_t seq = load_counter(Routine::delete_key, Step::del_counter_load);
      SearchResult sr = search(k, seq);
      LeafValidation v = validate_leaf(sr.gp, sr.p, sr.l, k);
      if (!v.validated) continue;
      if (sr.l->key != k) return false;  // key not in the tree
      // A leaf with a real key always has a grandparent: the root's right
      // child stays the inf2 leaf and its left child covers all real keys.
      VT_ASSERT(sr.p != root_ && sr.gp != nullptr);
      bool sibling_on_left = sr.l->key >= sr.p->key;
      NodeBase* sibling = read_child(sr.p, sibling_on_left, seq);
      LinkValidation pv = validate_link(sr.p, sibling, sibling_on_left);
      if (!pv.validated) continue;
      UpdateWord unfrozen = UpdateWord::make(UpdateTag::flag, dummy_);
      NodeBase* replacement;
      std::optional<UpdateWord> supdate;
      bool validated = true;
      if (!sibling->is_leaf()) {
        Internal* sib = as_internal(sibling);
        NodeBase* cl = load_child(sib, true, Routine::delete_key, Step::del_copy_left_load);
        NodeBase* cr = load_child(sib, false, Routine::delete_key, Step::del_copy_right_load);
        replacement = arena_.make_node<Internal>(sib->key, unfrozen, cl, cr, sr.p, seq);
        // The copy is only usable if the captured child links are still
        // current and the sibling is not itself being updated.
        LinkValidation s1 = validate_link(sib, cl, true);
        validated = s1.validated;
        supdate = s1.witness;
        if (validated) {
          LinkValidation s2 = validate_link(sib, cr, false);
          validated = s2.validated;
        }
      } else {
        replacement = arena_.make_node<Leaf>(sibling->key, unfrozen, sr.p, seq);
        supdate = load_update(sibling, Routine::delete_key, Step::del_supdate_load);
      }
      if (hooks_) hooks_->on_node_created(this_thread_id(), *replacement);
      if (!validated) continue;
      UpdateWord lupdate = load_update(sr.l, Routine::delete_key, Step::del_lupdate_load);
      ExecutePlan plan;
      plan.nodes = {sr.gp, sr.p, sr.l, sibling};
      plan.old_update = {*v.gpupdate, *v.pupdate, lupdate, *supdate};
      plan.mark = {sr.p, sr.l, sibling};
      plan.par = sr.gp;
      plan.old_child = sr.p;
      plan.new_child = replacement;
      plan.seq = seq;
      if (execute(plan)) return true;
    }
  }

  /// Keys in [a, b] at the scan's snapshot: the tree as of the phase the
  /// scan opened. Reads the counter, increments it (starting a new phase and
  /// fixing this scan's snapshot), then traverses version-seq children only,
  /// helping any in-progress update it encounters. Wait-free: the traversal
  /// is bounded by the snapshot's size regardless of other threads.
  std::vector<Key> range_scan(Key a, Key b) {
    VT_ASSERT(is_real_key(a) && is_real_key(b));
    OpGuard guard(this);
    std::uint64_t seq = load_counter(Routine::range_scan, Step::scan_counter_load);
    fetch_inc_counter(Routine::range_scan, Step::scan_counter_inc);
    std::vector<Key> out;
    scan_helper(root_, seq, a, b, out);
    return out;
  }

  /// Convenience form of the traversal step below: returns the keys of
  /// T_seq under node that fall in [a, b].
  std::vector<Key> scan_helper(NodeBase* node, std::uint64_t seq, Key a, Key b) {
    std::vector<Key> out;
    scan_helper(node, seq, a, b, out);
    return out;
  }

  /// Recursive traversal step of a scan over T_seq. Left subtree first, so
  /// the accumulated result is sorted.
  void scan_helper(NodeBase* node, std::uint64_t seq, Key a, Key b, std::vector<Key>& out) {
    VT_ASSERT(node != nullptr && node->seq <= seq);
    if (node->is_leaf()) {
      if (a <= node->key && node->key <= b) out.push_back(node->key);
      return;
    }
    UpdateWord up = load_update(node, Routine::scan_helper, Step::sh_update_load);
    InfoObject* infp = up.info();
    InfoState st = load_state(infp, Routine::scan_helper, Step::sh_state_load);
    if (st == InfoState::bottom || st == InfoState::try_)
      help(infp, HelpReason::scan_encounter);
    Internal* v = as_internal(node);
    if (a > v->key) {
      scan_helper(read_child(v, false, seq), seq, a, b, out);
    } else if (b < v->key) {
      scan_helper(read_child(v, true, seq), seq, a, b, out);
    } else {
      scan_helper(read_child(v, true, seq), seq, a, b, out);
      scan_helper(read_child(v, false, seq), seq, a, b, out);
    }
  }

 private:
  struct OpGuard {
    explicit OpGuard(Tree* t) : tree(t) {
      tree->inflight_.fetch_add(1, std::memory_order_relaxed);
    }
    ~OpGuard() { tree->inflight_.fetch_sub(1, std::memory_order_relaxed); }
    Tree* tree;
  };

  static bool contains_node(const std::vector<NodeBase*>& v, const NodeBase* n) noexcept {
    for (const NodeBase* x : v)
      if (x == n) return true;
    return false;
  }

  // ---- Instrumented shared-cell accesses. Every shared read, write and CAS
  // in the routines above goes through one of these, so an attached hook
  // observes (and, under the stepper, schedules) each step individually.

  UpdateWord load_update(NodeBase* n, Routine r, Step s, const InfoObject* aux = nullptr) {
    if (!hooks_) return n->update.load();
    StepPoint pt{this_thread_id(), r, s, StepKind::load, &n->update, CellKind::update, aux};
    hooks_->before_step(pt);
    UpdateWord w = n->update.load();
    hooks_->after_step(pt, StepResult{w.bits(), 0, false});
    return w;
  }

  bool cas_update(NodeBase* n, UpdateWord expected, UpdateWord desired, Routine r, Step s,
                  const InfoObject* aux) {
    if (!hooks_) {
      UpdateWord e = expected;
      return n->update.compare_exchange_strong(e, desired);
    }
    StepPoint pt{this_thread_id(), r, s, StepKind::cas, &n->update, CellKind::update, aux};
    hooks_->before_step(pt);
    UpdateWord e = expected;
    bool ok = n->update.compare_exchange_strong(e, desired);
    hooks_->after_step(pt, StepResult{e.bits(), desired.bits(), ok});
    return ok;
  }

  NodeBase* load_child(Internal* p, bool go_left, Routine r, Step s) {
    std::atomic<NodeBase*>& cell = go_left ? p->left : p->right;
    if (!hooks_) return cell.load();
    StepPoint pt{this_thread_id(), r, s, StepKind::load, &cell, CellKind::child, nullptr};
    hooks_->before_step(pt);
    NodeBase* c = cell.load();
    hooks_->after_step(pt, StepResult{detail::ptr_bits(c), 0, false});
    return c;
  }

  bool cas_child_cell(Internal* p, bool go_left, NodeBase* expected, NodeBase* desired,
                      Routine r, Step s, const InfoObject* aux) {
    std::atomic<NodeBase*>& cell = go_left ? p->left : p->right;
    if (!hooks_) {
      NodeBase* e = expected;
      return cell.compare_exchange_strong(e, desired);
    }
    StepPoint pt{this_thread_id(), r, s, StepKind::cas, &cell, CellKind::child, aux};
    hooks_->before_step(pt);
    NodeBase* e = expected;
    bool ok = cell.compare_exchange_strong(e, desired);
    hooks_->after_step(pt, StepResult{detail::ptr_bits(e), detail::ptr_bits(desired), ok});
    return ok;
  }

  InfoState load_state(InfoObject* info, Routine r, Step s) {
    if (!hooks_) return info->state.load();
    StepPoint pt{this_thread_id(), r, s, StepKind::load, &info->state, CellKind::state, info};
    hooks_->before_step(pt);
    InfoState st = info->state.load();
    hooks_->after_step(pt, StepResult{static_cast<std::uint64_t>(st), 0, false});
    return st;
  }

  bool cas_state(InfoObject* info, InfoState expected, InfoState desired, Step s) {
    if (!hooks_) {
      InfoState e = expected;
      return info->state.compare_exchange_strong(e, desired);
    }
    StepPoint pt{this_thread_id(), Routine::help, s, StepKind::cas, &info->state,
                 CellKind::state, info};
    hooks_->before_step(pt);
    InfoState e = expected;
    bool ok = info->state.compare_exchange_strong(e, desired);
    hooks_->after_step(pt, StepResult{static_cast<std::uint64_t>(e),
                                      static_cast<std::uint64_t>(desired), ok});
    return ok;
  }

  void store_state(InfoObject* info, InfoState value, Step s) {
    if (!hooks_) {
      info->state.store(value);
      return;
    }
    StepPoint pt{this_thread_id(), Routine::help, s, StepKind::store, &info->state,
                 CellKind::state, info};
    hooks_->before_step(pt);
    info->state.store(value);
    hooks_->after_step(pt, StepResult{0, static_cast<std::uint64_t>(value), false});
  }

  std::uint64_t load_counter(Routine r, Step s) {
    if (!hooks_) return counter_.value.load();
    StepPoint pt{this_thread_id(), r, s, StepKind::load, &counter_.value, CellKind::counter,
                 nullptr};
    hooks_->before_step(pt);
    std::uint64_t c = counter_.value.load();
    hooks_->after_step(pt, StepResult{c, 0, false});
    return c;
  }

  void fetch_inc_counter(Routine r, Step s) {
    if (!hooks_) {
      counter_.value.fetch_add(1);
      return;
    }
    StepPoint pt{this_thread_id(), r, s, StepKind::fetch_inc, &counter_.value,
                 CellKind::counter, nullptr};
    hooks_->before_step(pt);
    std::uint64_t old = counter_.value.fetch_add(1);
    hooks_->after_step(pt, StepResult{old, old + 1, false});
  }

  bool frozen_step(UpdateWord up, Routine r, Step s) {
    VT_ASSERT(up.info() != nullptr);
    InfoState st = load_state(up.info(), r, s);
    return detail::frozen_predicate(up.tag(), st);
  }

  Internal* root_;
  InfoObject* dummy_;
  PhaseCounter counter_;
  Arena arena_;
  ExecutionHooks* hooks_;
  std::atomic<int> inflight_{0};
};

/// Factory matching the initialization contract. The returned tree exposes
/// root(), dummy() and counter() for direct inspection.
inline std::unique_ptr<Tree> init_tree(ExecutionHooks* hooks = nullptr) {
  return std::make_unique<Tree>(hooks);
}

}  // namespace versiontree

#endif  // VERSIONTREE_TREE_HPP
