// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_HARNESS_ORACLE_HPP
#define VERSIONTREE_HARNESS_ORACLE_HPP

#include <set>
#include <vector>

#include "../key.hpp"
#include "history.hpp"

namespace versiontree::harness {

/// The sequential specification: a sorted set with the same four
/// operations. Every correctness statement in the harness bottoms out in
/// "replays like this on some order".
class SetOracle {
 public:
  OpResult apply(OpCode op, const std::vector<Key>& args) {
    switch (op) {
      case OpCode::contains:
        return OpResult::of(s_.count(args.at(0)) == 1);
      case OpCode::add:
        return OpResult::of(s_.insert(args.at(0)).second);
      case OpCode::remove:
        return OpResult::of(s_.erase(args.at(0)) == 1);
      case OpCode::range: {
        std::vector<Key> out;
        for (auto it = s_.lower_bound(args.at(0)); it != s_.end() && *it <= args.at(1); ++it)
          out.push_back(*it);
        return OpResult::of(std::move(out));
      }
    }
    return OpResult::of(false);
  }

  const std::set<Key>& state() const noexcept { return s_; }
  /// Direct state access for checkers that apply and undo operations.
  std::set<Key>& mutable_state() noexcept { return s_; }
  void reset() { s_.clear(); }

 private:
  std::set<Key> s_;
};

}  // namespace versiontree::harness

#endif  // VERSIONTREE_HARNESS_ORACLE_HPP
