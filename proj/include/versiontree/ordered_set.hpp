// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_ORDERED_SET_HPP
#define VERSIONTREE_ORDERED_SET_HPP

#include <memory>
#include <stdexcept>
#include <vector>

#include "tree.hpp"

namespace versiontree {

/// Public facade over the tree. Rejects the two sentinel keys up front so
/// the core routines only ever see real keys; everything else is exact
/// delegation. Safe to share across any number of threads.
class OrderedSet {
 public:
  explicit OrderedSet(ExecutionHooks* hooks = nullptr) : tree_(init_tree(hooks)) {}

  OrderedSet(const OrderedSet&) = delete;
  OrderedSet& operator=(const OrderedSet&) = delete;

  /// True iff k is in the set. Never writes except through helping.
  bool contains(Key k) {
    require_real(k, "contains");
    return tree_->find(k) != nullptr;
  }

  /// Adds k; true iff k was absent when the add took effect.
  bool add(Key k) {
    require_real(k, "add");
    return tree_->insert(k);
  }

  /// Removes k; true iff k was present when the removal took effect.
  bool remove(Key k) {
    require_real(k, "remove");
    return tree_->delete_key(k);
  }

  /// All keys in [a, b], ascending, as of one atomic snapshot. Empty when
  /// a > b.
  std::vector<Key> range(Key a, Key b) {
    require_real(a, "range");
    require_real(b, "range");
    return tree_->range_scan(a, b);
  }

  /// The underlying tree, exposed for the harness and tests only.
  Tree& tree() noexcept { return *tree_; }
  const Tree& tree() const noexcept { return *tree_; }

 private:
  static void require_real(Key k, const char* op) {
    if (!is_real_key(k))
      throw std::invalid_argument(std::string(op) + ": key outside the real-key domain");
  }

  std::unique_ptr<Tree> tree_;
};

inline std::unique_ptr<OrderedSet> new_set(ExecutionHooks* hooks = nullptr) {
  return std::make_unique<OrderedSet>(hooks);
}

}  // namespace versiontree

#endif  // VERSIONTREE_ORDERED_SET_HPP
