// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_HARNESS_INVARIANTS_HPP
#define VERSIONTREE_HARNESS_INVARIANTS_HPP

/// \file
/// Step observers that check the library's structural safety claims while
/// the stepper drives a schedule. Every checker watches the steps relevant
/// to one family of claims and records human-readable violations; a correct
/// run ends with every checker empty. The checkers only read memory between
/// steps (the stepper guarantees the world is paused), so attaching them
/// never changes which schedules are possible.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "../inspect.hpp"
#include "stepper.hpp"

namespace versiontree::harness {

/// Common reporting surface. A checker that saw nothing wrong is ok().
class InvariantChecker : public StepObserver {
 public:
  bool ok() const noexcept { return violations_.empty(); }
  const std::vector<std::string>& violations() const noexcept { return violations_; }
  virtual const char* name() const noexcept = 0;

 protected:
  void report(std::string msg) {
    if (violations_.size() < kMaxReports) violations_.push_back(std::move(msg));
  }

  static constexpr std::size_t kMaxReports = 64;

 private:
  std::vector<std::string> violations_;
};

/// The set key an update descriptor is about: the key an insert adds or a
/// delete removes. Recognized by shape: an insert freezes {parent, leaf},
/// a delete freezes {grandparent, parent, leaf, sibling}. For an insert the
/// key is the child of the replacement subtree that is not a copy of the
/// replaced leaf.
inline std::optional<Key> descriptor_op_key(const InfoObject& i) {
  if (i.nodes.size() == 2 && i.new_child != nullptr && !i.new_child->is_leaf() &&
      i.old_child != nullptr) {
    const auto* rep = static_cast<const Internal*>(i.new_child);
    const NodeBase* l = rep->left.load();
    const NodeBase* r = rep->right.load();
    if (l == nullptr || r == nullptr) return std::nullopt;
    return l->key == i.old_child->key ? r->key : l->key;
  }
  if (i.nodes.size() == 4) return i.nodes[2]->key;
  return std::nullopt;
}

/// Descriptor states may only move bottom -> try / abort (by the handshake
/// CAS steps) and try -> commit / abort (by the outcome writes); commit and
/// abort are terminal. Every observed state value must also agree with the
/// value the checker knows the cell to hold, which catches writes that
/// bypass the instrumented sites.
class StateMachineChecker final : public InvariantChecker {
 public:
  const char* name() const noexcept override { return "state-machine"; }

  void info_created(Stepper&, int, const InfoObject& i) override {
    cells_[&i.state] = i.state.load();
  }

  void after(Stepper&, const StepPoint& pt, const StepResult& r) override {
    if (pt.cell_kind != CellKind::state) return;
    switch (pt.kind) {
      case StepKind::load:
        observe(pt, decode(r.loaded));
        break;
      case StepKind::cas:
        if (r.cas_ok)
          apply_cas(pt, decode(r.loaded), decode(r.stored));
        else
          observe(pt, decode(r.loaded));
        break;
      case StepKind::store:
        apply_store(pt, decode(r.stored));
        break;
      case StepKind::fetch_inc:
        report("fetch_inc on a state cell");
        break;
    }
  }

 private:
  static InfoState decode(std::uint64_t v) noexcept { return static_cast<InfoState>(v); }

  void observe(const StepPoint& pt, InfoState seen) {
    auto it = cells_.find(pt.cell);
    if (it == cells_.end()) {
      cells_[pt.cell] = seen;  // first sighting (the pre-registered dummy)
      return;
    }
    if (it->second != seen) {
      std::ostringstream os;
      os << step_name(pt.step) << " observed state " << info_state_name(seen)
         << " but the cell last held " << info_state_name(it->second);
      report(os.str());
    }
  }

  void apply_cas(const StepPoint& pt, InfoState from, InfoState to) {
    observe(pt, from);
    // The only state CAS steps are the handshake pair, bottom -> try/abort.
    if (from != InfoState::bottom || (to != InfoState::try_ && to != InfoState::abort)) {
      std::ostringstream os;
      os << step_name(pt.step) << " transitioned " << info_state_name(from) << " -> "
         << info_state_name(to);
      report(os.str());
    }
    cells_[pt.cell] = to;
  }

  void apply_store(const StepPoint& pt, InfoState to) {
    auto it = cells_.find(pt.cell);
    if (it == cells_.end()) {
      cells_[pt.cell] = to;
      return;
    }
    InfoState from = it->second;
    bool legal = (to == InfoState::commit && (from == InfoState::try_ || from == InfoState::commit)) ||
                 (to == InfoState::abort && (from == InfoState::try_ || from == InfoState::abort));
    if (!legal) {
      std::ostringstream os;
      os << step_name(pt.step) << " wrote " << info_state_name(to) << " over "
         << info_state_name(from);
      report(os.str());
    }
    it->second = to;
  }

  std::unordered_map<const void*, InfoState> cells_;
};

/// Update words and child pointers never return to a value they held
/// before: every freeze installs a freshly allocated descriptor and every
/// child CAS installs a freshly allocated node, and nothing is ever
/// recycled. The checker tracks, per cell, the current value and the set of
/// past values, and also cross-checks every observation against the value
/// it knows the cell to hold.
class NoAbaChecker final : public InvariantChecker {
 public:
  const char* name() const noexcept override { return "no-aba"; }

  void node_created(Stepper&, int, const NodeBase& n) override {
    seed(&n.update, n.update.load().bits());
    if (!n.is_leaf()) {
      const auto& in = static_cast<const Internal&>(n);
      seed(&in.left, detail::ptr_bits(in.left.load()));
      seed(&in.right, detail::ptr_bits(in.right.load()));
    }
  }

  void after(Stepper&, const StepPoint& pt, const StepResult& r) override {
    if (pt.cell_kind != CellKind::update && pt.cell_kind != CellKind::child) return;
    Track& t = cells_[pt.cell];
    switch (pt.kind) {
      case StepKind::load:
        observe(t, pt, r.loaded);
        break;
      case StepKind::cas:
        if (!r.cas_ok) {
          observe(t, pt, r.loaded);  // the witnessed actual value
          break;
        }
        observe(t, pt, r.loaded);  // the replaced value
        if (t.past.count(r.stored) || (t.known && t.current == r.stored)) {
          std::ostringstream os;
          os << step_name(pt.step) << " reinstalled a value the cell held before";
          report(os.str());
        }
        if (t.known) t.past.insert(t.current);
        t.current = r.stored;
        t.known = true;
        break;
      case StepKind::store:
      case StepKind::fetch_inc:
        report("unexpected step kind on an update/child cell");
        break;
    }
  }

 private:
  struct Track {
    bool known = false;
    std::uint64_t current = 0;
    std::unordered_set<std::uint64_t> past;
  };

  void seed(const void* cell, std::uint64_t value) {
    Track& t = cells_[cell];
    if (!t.known) {
      t.known = true;
      t.current = value;
    }
  }

  void observe(Track& t, const StepPoint& pt, std::uint64_t seen) {
    if (!t.known) {
      t.known = true;
      t.current = seen;
      return;
    }
    if (t.current != seen) {
      std::ostringstream os;
      os << step_name(pt.step) << " observed a value the checker did not see installed";
      report(os.str());
    }
    t.current = seen;
  }

  std::unordered_map<const void*, Track> cells_;
};

/// For each (descriptor, node) pair, at most one freeze CAS succeeds, and
/// only the first attempted one can (a later attempt expects a word the
/// cell can no longer hold). A successful freeze must install a word that
/// references the attributed descriptor.
class FreezeExclusivityChecker final : public InvariantChecker {
 public:
  const char* name() const noexcept override { return "freeze-exclusivity"; }

  void after(Stepper&, const StepPoint& pt, const StepResult& r) override {
    if (pt.step != Step::exec_freeze_cas && pt.step != Step::help_freeze_cas) return;
    if (pt.info == nullptr) return;
    Track& t = tracks_[{pt.info, pt.cell}];
    ++t.attempts;
    if (!r.cas_ok) return;
    ++t.successes;
    if (t.attempts > 1) report("a non-first freeze CAS for a (descriptor, node) succeeded");
    if (t.successes > 1) report("two freeze CAS steps for one (descriptor, node) succeeded");
    if ((r.stored & ~std::uint64_t{1}) != detail::ptr_bits(pt.info))
      report("freeze CAS installed a word for a different descriptor");
  }

 private:
  struct Track {
    int attempts = 0;
    int successes = 0;
  };

  std::map<std::pair<const InfoObject*, const void*>, Track> tracks_;
};

/// Among the child CAS steps attributed to one descriptor, the first
/// attempted succeeds and every later one fails. (Helpers reach the child
/// CAS only with every frozen node verified, so the parent's cell still
/// holds the old child until the first of them swings it.)
class ChildCasChecker final : public InvariantChecker {
 public:
  const char* name() const noexcept override { return "child-cas"; }

  void after(Stepper&, const StepPoint& pt, const StepResult& r) override {
    if (pt.step != Step::cc_child_cas || pt.info == nullptr) return;
    Track& t = tracks_[pt.info];
    ++t.attempts;
    if (r.cas_ok) {
      ++t.successes;
      if (t.attempts > 1) report("a non-first child CAS for a descriptor succeeded");
      if (t.successes > 1) report("two child CAS steps for one descriptor succeeded");
    } else if (t.attempts == 1) {
      report("the first child CAS belonging to a descriptor failed");
    }
  }

 private:
  struct Track {
    int attempts = 0;
    int successes = 0;
  };

  std::unordered_map<const InfoObject*, Track> tracks_;
};

/// An update is imminent from its publishing freeze CAS until its child
/// CAS. Two updates on the same key must never be imminent at the same
/// time: the first freeze of the later one can only succeed after the
/// earlier one's child CAS made its leaf reachable (or unreachable).
class ImminenceChecker final : public InvariantChecker {
 public:
  const char* name() const noexcept override { return "imminence"; }

  void info_created(Stepper&, int, const InfoObject& i) override {
    Rec r;
    if (auto k = descriptor_op_key(i)) {
      r.key = *k;
      r.has_key = true;
    }
    recs_[&i] = r;
  }

  void after(Stepper&, const StepPoint& pt, const StepResult& r) override {
    ++now_;
    if (!r.cas_ok || pt.info == nullptr) return;
    auto it = recs_.find(pt.info);
    if (it == recs_.end()) return;
    if (pt.step == Step::exec_freeze_cas) {
      it->second.frozen = true;
      it->second.freeze_step = now_;
    } else if (pt.step == Step::cc_child_cas) {
      it->second.committed = true;
      it->second.commit_step = now_;
    }
  }

  void at_end(Stepper&) override {
    // Collect [publish, child CAS) intervals of committed descriptors and
    // look for same-key overlap.
    std::map<Key, std::vector<std::pair<std::uint64_t, std::uint64_t>>> by_key;
    for (const auto& [info, rec] : recs_) {
      if (!rec.committed) continue;
      if (!rec.frozen || !rec.has_key) {
        report("committed descriptor with no publishing freeze or unrecognized shape");
        continue;
      }
      by_key[rec.key].emplace_back(rec.freeze_step, rec.commit_step);
    }
    for (auto& [key, spans] : by_key) {
      std::sort(spans.begin(), spans.end());
      for (std::size_t i = 1; i < spans.size(); ++i)
        if (spans[i].first < spans[i - 1].second) {
          std::ostringstream os;
          os << "two committed updates on key " << key << " were imminent simultaneously";
          report(os.str());
        }
    }
  }

 private:
  struct Rec {
    Key key = 0;
    bool has_key = false;
    bool frozen = false;
    bool committed = false;
    std::uint64_t freeze_step = 0;
    std::uint64_t commit_step = 0;
  };

  std::unordered_map<const InfoObject*, Rec> recs_;
  std::uint64_t now_ = 0;
};

/// A committed child CAS of a phase-seq descriptor must leave every older
/// version tree T_i (i < seq) bit-identical, must change T_seq by exactly
/// its own key, and must leave every version a well-formed leaf-oriented
/// BST. A failed child CAS must change nothing at all.
class VersionIsolationChecker final : public InvariantChecker {
 public:
  explicit VersionIsolationChecker(bool audit_all_phases = true)
      : audit_(audit_all_phases) {}

  const char* name() const noexcept override { return "version-isolation"; }

  void before(Stepper& s, const StepPoint& pt) override {
    if (pt.step != Step::cc_child_cas || pt.info == nullptr) return;
    pending_.seq = pt.info->seq;
    pending_.top = s.tree().counter().value.load();
    pending_.hashes.clear();
    for (std::uint64_t i = 0; i <= pending_.top; ++i)
      pending_.hashes.push_back(inspect::shape_hash(inspect::materialize_version(s.tree(), i)));
    pending_.keys_before =
        inspect::collect_keys(inspect::materialize_version(s.tree(), pending_.seq));
    pending_.valid = true;
  }

  void after(Stepper& s, const StepPoint& pt, const StepResult& r) override {
    if (pt.step != Step::cc_child_cas || pt.info == nullptr || !pending_.valid) return;
    pending_.valid = false;
    const std::uint64_t seq = pt.info->seq;
    for (std::uint64_t i = 0; i <= pending_.top; ++i) {
      VersionTree vt = inspect::materialize_version(s.tree(), i);
      std::uint64_t h = inspect::shape_hash(vt);
      bool must_match = r.cas_ok ? (i < seq) : true;
      if (must_match && h != pending_.hashes[i]) {
        std::ostringstream os;
        os << (r.cas_ok ? "committed" : "failed") << " child CAS of phase " << seq
           << " changed T_" << i;
        report(os.str());
      }
      if (audit_) {
        inspect::AuditReport rep = inspect::audit_leaf_oriented_bst(vt);
        for (const std::string& issue : rep.issues) {
          std::ostringstream os;
          os << "after child CAS of phase " << seq << ", T_" << i << ": " << issue;
          report(os.str());
        }
      }
    }
    if (!r.cas_ok) return;
    // The phase's own tree changes by exactly the descriptor's key.
    std::vector<Key> after_keys =
        inspect::collect_keys(inspect::materialize_version(s.tree(), seq));
    std::optional<Key> opk = descriptor_op_key(*pt.info);
    if (!opk) {
      report("committed descriptor with unrecognized shape");
      return;
    }
    std::vector<Key> expect = pending_.keys_before;
    bool inserting = pt.info->nodes.size() == 2;
    if (inserting) {
      auto pos = std::lower_bound(expect.begin(), expect.end(), *opk);
      if (pos != expect.end() && *pos == *opk) {
        report("insert committed for a key already in its phase tree");
        return;
      }
      expect.insert(pos, *opk);
    } else {
      auto pos = std::lower_bound(expect.begin(), expect.end(), *opk);
      if (pos == expect.end() || *pos != *opk) {
        report("delete committed for a key absent from its phase tree");
        return;
      }
      expect.erase(pos);
    }
    if (after_keys != expect) {
      std::ostringstream os;
      os << "child CAS of phase " << seq << " did not change T_" << seq
         << " by exactly its key";
      report(os.str());
    }
  }

 private:
  struct Pending {
    bool valid = false;
    std::uint64_t seq = 0;
    std::uint64_t top = 0;
    std::vector<std::uint64_t> hashes;
    std::vector<Key> keys_before;
  };

  bool audit_;
  Pending pending_;
};

/// When a leaf validation succeeds, the answer derived from the returned
/// leaf matches the current tree at that very step: descending the current
/// tree by the search key reaches a leaf with the same key-match verdict.
/// (Node identity is deliberately not checked: an insert may replace the
/// leaf with a same-key copy between the two re-reads without changing the
/// answer.)
class ValidationSoundnessChecker final : public InvariantChecker {
 public:
  const char* name() const noexcept override { return "validation-soundness"; }

  void validate_event(Stepper& s, int, bool validated, Key k, const NodeBase*,
                      const NodeBase*, const NodeBase* l) override {
    if (!validated) return;
    if (l == nullptr) {
      report("successful validation with a null leaf");
      return;
    }
    const NodeBase* m = s.tree().root();
    std::size_t guard = s.tree().arena().node_count() + 4;
    while (!m->is_leaf() && guard-- > 0) {
      const auto* in = static_cast<const Internal*>(m);
      m = k < in->key ? in->left.load() : in->right.load();
      if (m == nullptr) {
        report("current tree has a null child on the search path");
        return;
      }
    }
    if (!m->is_leaf()) {
      report("current-tree descent did not terminate");
      return;
    }
    if ((m->key == k) != (l->key == k)) {
      std::ostringstream os;
      os << "validated leaf reports key " << k << (l->key == k ? " present" : " absent")
         << " but the current tree disagrees";
      report(os.str());
    }
  }
};

/// Every node a search visits lies on the key's path in the version it
/// reads, in some configuration the tree passed through since that search
/// started. The path of a fixed (key, version) only changes at successful
/// child CAS steps, so sampling it at the search's start and after every
/// such step covers every configuration exactly.
class SearchPathChecker final : public InvariantChecker {
 public:
  const char* name() const noexcept override { return "search-path"; }

  void search_visit(Stepper& s, int t, Key k, std::uint64_t seq, const NodeBase& n) override {
    Active& a = act_[t];
    if (&n == s.tree().root()) {
      a.on = true;
      a.k = k;
      a.seq = seq;
      a.union_path.clear();
      sample(s, a);
    }
    if (!a.on) return;
    if (!a.union_path.count(&n)) {
      std::ostringstream os;
      os << "search for " << a.k << " in T_" << a.seq
         << " visited a node outside every configuration's path";
      report(os.str());
    }
  }

  void after(Stepper& s, const StepPoint& pt, const StepResult& r) override {
    if (pt.step != Step::cc_child_cas || !r.cas_ok) return;
    for (auto& [t, a] : act_)
      if (a.on) sample(s, a);
  }

  void validate_event(Stepper&, int t, bool, Key, const NodeBase*, const NodeBase*,
                      const NodeBase*) override {
    act_[t].on = false;  // the search this validation concluded is over
  }

 private:
  struct Active {
    bool on = false;
    Key k = 0;
    std::uint64_t seq = 0;
    std::unordered_set<const NodeBase*> union_path;
  };

  static void add_path(Stepper& s, Active& a) {
    const NodeBase* n = s.tree().root();
    a.union_path.insert(n);
    std::size_t guard = s.tree().arena().node_count() + 4;
    while (!n->is_leaf() && guard-- > 0) {
      n = inspect::resolve_child(static_cast<const Internal*>(n), a.k < n->key, a.seq);
      if (n == nullptr) return;
      a.union_path.insert(n);
    }
  }

  void sample(Stepper& s, Active& a) { add_path(s, a); }

  std::unordered_map<int, Active> act_;
};

/// Not a correctness checker: counts the shared-memory steps (and prev
/// hops) one thread performs between an invoke and its respond. Used to
/// check the wait-free step bound of scans.
class OpStepCounter : public StepObserver {
 public:
  explicit OpStepCounter(int thread) : tid_(thread) {}

  std::uint64_t steps() const noexcept { return steps_; }
  std::uint64_t hops() const noexcept { return hops_; }
  bool open() const noexcept { return active_; }

  void after(Stepper&, const StepPoint& pt, const StepResult&) override {
    if (pt.thread != tid_) return;
    if (pt.routine == Routine::harness) {
      if (pt.step == Step::invoke) {
        active_ = true;
        steps_ = 0;
        hops_ = 0;
      } else if (pt.step == Step::respond) {
        active_ = false;
      }
      return;
    }
    if (active_) ++steps_;
  }

  void prev_hop(Stepper&, int t, const NodeBase&, const NodeBase&) override {
    if (t == tid_ && active_) ++hops_;
  }

 private:
  int tid_;
  bool active_ = false;
  std::uint64_t steps_ = 0;
  std::uint64_t hops_ = 0;
};

/// The full checker battery, ready to attach to a stepper.
class StandardCheckers {
 public:
  void attach(Stepper& s) {
    for (InvariantChecker* c : all()) s.add_observer(c);
  }

  bool ok() const {
    for (const InvariantChecker* c : all())
      if (!c->ok()) return false;
    return true;
  }

  /// Violations across every checker, prefixed with the checker's name.
  std::vector<std::string> all_violations() const {
    std::vector<std::string> out;
    for (const InvariantChecker* c : all())
      for (const std::string& v : c->violations())
        out.push_back(std::string(c->name()) + ": " + v);
    return out;
  }

  StateMachineChecker state_machine;
  NoAbaChecker no_aba;
  FreezeExclusivityChecker freeze_exclusivity;
  ChildCasChecker child_cas;
  ImminenceChecker imminence;
  VersionIsolationChecker version_isolation;
  ValidationSoundnessChecker validation_soundness;
  SearchPathChecker search_path;

 private:
  std::vector<const InvariantChecker*> all() const {
    return {&state_machine, &no_aba,   &freeze_exclusivity,    &child_cas,
            &imminence,     &version_isolation, &validation_soundness, &search_path};
  }

  std::vector<InvariantChecker*> all() {
    return {&state_machine, &no_aba,   &freeze_exclusivity,    &child_cas,
            &imminence,     &version_isolation, &validation_soundness, &search_path};
  }
};

}  // namespace versiontree::harness

#endif  // VERSIONTREE_HARNESS_INVARIANTS_HPP
