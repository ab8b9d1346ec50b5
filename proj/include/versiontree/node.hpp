// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_NODE_HPP
#define VERSIONTREE_NODE_HPP

#include <atomic>
#include <cassert>
#include <cstdint>
#include <vector>

#include "key.hpp"

namespace versiontree {

class InfoObject;

/// Tag half of an update word. A Flag announces an impending child change
/// under the node; a Mark announces permanent removal of the node itself.
enum class UpdateTag : std::uint8_t { flag, mark };

/// The (tag, descriptor) pair stored in every node's update cell. Packed
/// into a single machine word: the tag lives in the low bit of the
/// descriptor pointer, which is free because InfoObject alignment is at
/// least 8. A single-word representation is what makes the freeze step one
/// compare-and-set. Equality is bit equality, i.e. tag equality plus
/// identity (not structural) comparison of the descriptor reference.
class UpdateWord {
 public:
  UpdateWord() = default;

  static UpdateWord make(UpdateTag tag, const InfoObject* info) noexcept {
    UpdateWord w;
    w.bits_ = reinterpret_cast<std::uintptr_t>(info) |
              (tag == UpdateTag::mark ? std::uintptr_t{1} : std::uintptr_t{0});
    return w;
  }

  UpdateTag tag() const noexcept {
    return (bits_ & 1) ? UpdateTag::mark : UpdateTag::flag;
  }

  InfoObject* info() const noexcept {
    return reinterpret_cast<InfoObject*>(bits_ & ~std::uintptr_t{1});
  }

  std::uint64_t bits() const noexcept { return static_cast<std::uint64_t>(bits_); }

  friend bool operator==(UpdateWord a, UpdateWord b) noexcept = default;

 private:
  std::uintptr_t bits_ = 0;
};

static_assert(sizeof(UpdateWord) == sizeof(void*));
static_assert(std::atomic<UpdateWord>::is_always_lock_free);

/// Descriptor life cycle. Legal transitions are bottom -> try_ / abort and
/// try_ -> commit / abort; commit and abort are terminal.
enum class InfoState : std::uint8_t { bottom, try_, commit, abort };

inline const char* info_state_name(InfoState s) noexcept {
  switch (s) {
    case InfoState::bottom: return "bottom";
    case InfoState::try_: return "try";
    case InfoState::commit: return "commit";
    case InfoState::abort: return "abort";
  }
  return "?";
}

struct NodeBase;
struct Internal;

/// Operation descriptor. Carries everything any helper needs to finish or
/// abort the update: the nodes to freeze (in order) with the update words
/// expected by each freeze CAS, which of them get Mark rather than Flag,
/// and the single child replacement to perform. Only state is mutable.
class alignas(8) InfoObject {
 public:
  // Dummy constructor: state abort, everything else empty.
  InfoObject() : state(InfoState::abort), par(nullptr), old_child(nullptr), new_child(nullptr), seq(0) {}

  InfoObject(std::vector<NodeBase*> nodes_in, std::vector<UpdateWord> old_update_in,
             std::vector<NodeBase*> mark_in, Internal* par_in, NodeBase* old_child_in,
             NodeBase* new_child_in, std::uint64_t seq_in)
      : state(InfoState::bottom),
        nodes(std::move(nodes_in)),
        old_update(std::move(old_update_in)),
        mark(std::move(mark_in)),
        par(par_in),
        old_child(old_child_in),
        new_child(new_child_in),
        seq(seq_in) {
    assert(nodes.size() == old_update.size());
  }

  InfoObject(const InfoObject&) = delete;
  InfoObject& operator=(const InfoObject&) = delete;

  bool in_mark_list(const NodeBase* n) const noexcept {
    for (const NodeBase* m : mark)
      if (m == n) return true;
    return false;
  }

  std::atomic<InfoState> state;
  const std::vector<NodeBase*> nodes;      // nodes to be frozen, in freeze order
  const std::vector<UpdateWord> old_update;  // expected values for the freeze CAS steps
  const std::vector<NodeBase*> mark;       // subset of nodes that get Mark
  Internal* const par;                     // node whose child cell will change
  NodeBase* const old_child;
  NodeBase* const new_child;
  const std::uint64_t seq;                 // phase the operation belongs to
};

/// Common node header. key, prev and seq are immutable; only the update
/// cell (and, for internal nodes, the child cells) ever change after
/// publication. prev links a node to the node it superseded, which is what
/// keeps earlier tree versions reachable: nothing is ever reclaimed.
struct NodeBase {
  NodeBase(Key key_in, UpdateWord initial_update, NodeBase* prev_in, std::uint64_t seq_in,
           bool leaf)
      : key(key_in), update(initial_update), prev(prev_in), seq(seq_in), leaf_(leaf) {}

  virtual ~NodeBase() = default;
  NodeBase(const NodeBase&) = delete;
  NodeBase& operator=(const NodeBase&) = delete;

  bool is_leaf() const noexcept { return leaf_; }

  const Key key;
  std::atomic<UpdateWord> update;
  NodeBase* const prev;
  const std::uint64_t seq;

 private:
  const bool leaf_;
};

struct Leaf final : NodeBase {
  Leaf(Key key_in, UpdateWord initial_update, NodeBase* prev_in, std::uint64_t seq_in)
      : NodeBase(key_in, initial_update, prev_in, seq_in, true) {}
};

struct Internal final : NodeBase {
  Internal(Key key_in, UpdateWord initial_update, NodeBase* left_in, NodeBase* right_in,
           NodeBase* prev_in, std::uint64_t seq_in)
      : NodeBase(key_in, initial_update, prev_in, seq_in, false), left(left_in), right(right_in) {}

  std::atomic<NodeBase*> left;
  std::atomic<NodeBase*> right;
};

inline Internal* as_internal(NodeBase* n) noexcept {
  assert(n != nullptr && !n->is_leaf());
  return static_cast<Internal*>(n);
}

inline Leaf* as_leaf(NodeBase* n) noexcept {
  assert(n != nullptr && n->is_leaf());
  return static_cast<Leaf*>(n);
}

/// The shared phase counter. Scans advance it; updates handshake with it.
struct PhaseCounter {
  std::atomic<std::uint64_t> value{0};
};

}  // namespace versiontree

#endif  // VERSIONTREE_NODE_HPP
