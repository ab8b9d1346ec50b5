// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_INSPECT_HPP
#define VERSIONTREE_INSPECT_HPP

/// \file
/// Test-support plumbing: materializes the tree a phase-i operation would
/// traverse (resolving every edge through prev chains, the same way
/// read_child does) and audits it as a leaf-oriented BST. None of this is
/// part of the concurrent algorithm; the walkers below use raw atomic loads
/// and bypass instrumentation hooks entirely, so invariant checkers can run
/// them between stepper steps without perturbing schedules.

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tree.hpp"

namespace versiontree {

/// A materialized version-i tree: nodes reachable from the root via
/// version-i children, edges resolved. nodes[0] is the root.
struct VersionTree {
  struct VNode {
    const NodeBase* node = nullptr;
    int left = -1;   // index into nodes, -1 for leaves
    int right = -1;
  };
  std::uint64_t phase = 0;
  std::vector<VNode> nodes;

  std::size_t size() const noexcept { return nodes.size(); }
};

namespace inspect {

/// Version-i child resolution on raw memory (no hooks, no steps).
inline const NodeBase* resolve_child(const Internal* p, bool go_left, std::uint64_t i) {
  const NodeBase* c = go_left ? p->left.load() : p->right.load();
  while (c != nullptr && c->seq > i) c = c->prev;
  return c;
}

/// Materializes T_i from the current memory state. Safe whenever memory is
/// stable (quiescence, or a paused stepper). The visit cap guards against a
/// broken structure looping forever; hitting it throws.
inline VersionTree materialize_version(const Tree& t, std::uint64_t i) {
  VersionTree out;
  out.phase = i;
  const std::size_t cap = 2 * t.arena().node_count() + 16;
  // Depth-first, building the index-linked node table.
  struct Item {
    const NodeBase* node;
    int parent;
    bool left_side;
  };
  std::vector<Item> stack;
  stack.push_back({t.root(), -1, false});
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    if (it.node == nullptr) throw std::logic_error("version tree has a null resolved edge");
    if (out.nodes.size() > cap)
      throw std::logic_error("version tree traversal exceeded node cap (cycle?)");
    int idx = static_cast<int>(out.nodes.size());
    out.nodes.push_back(VersionTree::VNode{it.node, -1, -1});
    if (it.parent >= 0) {
      auto& pn = out.nodes[static_cast<std::size_t>(it.parent)];
      (it.left_side ? pn.left : pn.right) = idx;
    }
    if (!it.node->is_leaf()) {
      const auto* in = static_cast<const Internal*>(it.node);
      // Push right first so the left child pops (and gets indexed) first.
      stack.push_back({resolve_child(in, false, i), idx, false});
      stack.push_back({resolve_child(in, true, i), idx, true});
    }
  }
  return out;
}

/// In-order leaf keys of a materialized tree (sentinels included).
inline std::vector<Key> leaf_keys_in_order(const VersionTree& vt) {
  std::vector<Key> out;
  if (vt.nodes.empty()) return out;
  std::vector<std::pair<int, bool>> stack;  // (index, children_done)
  stack.emplace_back(0, false);
  while (!stack.empty()) {
    auto [idx, done] = stack.back();
    stack.pop_back();
    const auto& vn = vt.nodes[static_cast<std::size_t>(idx)];
    if (vn.node->is_leaf()) {
      out.push_back(vn.node->key);
    } else if (!done) {
      // In-order: left, then right (leaf-oriented, so the internal key
      // itself is not emitted).
      stack.emplace_back(vn.right, false);
      stack.emplace_back(vn.left, false);
    }
  }
  return out;
}

/// Real keys present in the version-i tree, ascending.
inline std::vector<Key> collect_keys(const VersionTree& vt) {
  std::vector<Key> out;
  for (Key k : leaf_keys_in_order(vt))
    if (is_real_key(k)) out.push_back(k);
  return out;
}

struct AuditReport {
  bool ok = true;
  std::vector<std::string> issues;

  void fail(std::string msg) {
    ok = false;
    issues.push_back(std::move(msg));
  }
};

/// Checks that a materialized version tree is a well-formed leaf-oriented
/// BST: both sentinels in place, every internal node has two children, node
/// phases within bound, and routing keys consistent (left subtree strictly
/// below the internal key, right subtree at or above it).
inline AuditReport audit_leaf_oriented_bst(const VersionTree& vt) {
  AuditReport rep;
  if (vt.nodes.empty()) {
    rep.fail("empty version tree");
    return rep;
  }
  const auto& root = vt.nodes[0];
  if (root.node->is_leaf() || root.node->key != kInf2)
    rep.fail("root is not an internal node keyed inf2");

  // Structural pass: child indices present for internals, seq bound.
  for (std::size_t i = 0; i < vt.nodes.size(); ++i) {
    const auto& vn = vt.nodes[i];
    if (vn.node->seq > vt.phase) {
      std::ostringstream os;
      os << "node with seq " << vn.node->seq << " inside T_" << vt.phase;
      rep.fail(os.str());
    }
    if (!vn.node->is_leaf() && (vn.left < 0 || vn.right < 0))
      rep.fail("internal node missing a resolved child");
  }

  // Routing pass: every leaf under a left edge is < the internal's key,
  // every leaf under a right edge is >= it. Walk with (lo, hi) bounds.
  struct Frame {
    int idx;
    Key lo;
    bool has_lo;
    Key hi;
    bool has_hi;
  };
  std::vector<Frame> stack;
  stack.push_back({0, 0, false, 0, false});
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const auto& vn = vt.nodes[static_cast<std::size_t>(f.idx)];
    Key k = vn.node->key;
    if ((f.has_lo && k < f.lo) || (f.has_hi && k >= f.hi)) {
      std::ostringstream os;
      os << "key " << k << " violates routing bounds";
      rep.fail(os.str());
    }
    if (!vn.node->is_leaf() && vn.left >= 0 && vn.right >= 0) {
      stack.push_back({vn.left, f.lo, f.has_lo, k, true});
      stack.push_back({vn.right, k, true, f.hi, f.has_hi});
    }
  }

  // Leaf order pass: in-order leaves strictly ascending, ending inf1, inf2.
  std::vector<Key> leaves = leaf_keys_in_order(vt);
  for (std::size_t i = 1; i < leaves.size(); ++i)
    if (leaves[i - 1] >= leaves[i]) {
      rep.fail("leaf keys not strictly ascending in order");
      break;
    }
  if (leaves.size() < 2 || leaves[leaves.size() - 2] != kInf1 || leaves.back() != kInf2)
    rep.fail("sentinel leaves inf1, inf2 not in place");
  return rep;
}

/// Order-sensitive structural hash of a version tree (shape, kinds, keys,
/// seqs). Used for before/after diffs and determinism checks.
inline std::uint64_t shape_hash(const VersionTree& vt) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (const auto& vn : vt.nodes) {
    mix(vn.node->is_leaf() ? 1 : 2);
    mix(static_cast<std::uint64_t>(vn.node->key));
    mix(vn.node->seq);
    mix(static_cast<std::uint64_t>(vn.left + 1));
    mix(static_cast<std::uint64_t>(vn.right + 1));
  }
  return h;
}

/// Hash over every node the arena has allocated: key, seq and prev identity.
/// These fields are immutable, so two quiescent snapshots of the same tree
/// must agree.
inline std::uint64_t immutable_fields_hash(const Tree& t) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  t.arena().for_each_node([&](const NodeBase& n) {
    mix(static_cast<std::uint64_t>(n.key));
    mix(n.seq);
    mix(detail::ptr_bits(n.prev));
  });
  return h;
}

}  // namespace inspect

/// Public reconstruction entry point: requires quiescence (no operation in
/// flight on any thread), since resolving edges while updates run would race
/// with child CAS steps.
inline VersionTree reconstruct_version_tree(const Tree& t, std::uint64_t i) {
  if (t.inflight() != 0)
    throw std::logic_error("reconstruct_version_tree requires quiescence");
  if (i > t.counter().value.load())
    throw std::logic_error("reconstruct_version_tree: phase beyond the counter");
  return inspect::materialize_version(t, i);
}

}  // namespace versiontree

#endif  // VERSIONTREE_INSPECT_HPP
