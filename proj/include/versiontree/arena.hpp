// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_ARENA_HPP
#define VERSIONTREE_ARENA_HPP

#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "node.hpp"

namespace versiontree {

/// Owns every node and descriptor a tree ever allocates. There is no
/// reclamation: superseded nodes stay reachable through prev pointers, so
/// everything lives until the arena is destroyed with the tree.
class Arena {
 public:
  template <class T, class... Args>
  T* make_node(Args&&... args) {
    auto owned = std::make_unique<T>(std::forward<Args>(args)...);
    T* raw = owned.get();
    std::lock_guard<std::mutex> lock(mu_);
    nodes_.push_back(std::move(owned));
    return raw;
  }

  template <class... Args>
  InfoObject* make_info(Args&&... args) {
    auto owned = std::make_unique<InfoObject>(std::forward<Args>(args)...);
    InfoObject* raw = owned.get();
    std::lock_guard<std::mutex> lock(mu_);
    infos_.push_back(std::move(owned));
    return raw;
  }

  /// Visit every node allocated so far. Only meaningful at quiescence.
  template <class Fn>
  void for_each_node(Fn&& fn) const {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& n : nodes_) fn(*n);
  }

  template <class Fn>
  void for_each_info(Fn&& fn) const {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& i : infos_) fn(*i);
  }

  std::size_t node_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return nodes_.size();
  }

  std::size_t info_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return infos_.size();
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::unique_ptr<NodeBase>> nodes_;
  std::vector<std::unique_ptr<InfoObject>> infos_;
};

}  // namespace versiontree

#endif  // VERSIONTREE_ARENA_HPP
