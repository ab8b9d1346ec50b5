// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_KEY_HPP
#define VERSIONTREE_KEY_HPP

#include <cstdint>
#include <limits>

namespace versiontree {

/// Keys are 64-bit signed integers. The two largest representable values are
/// reserved as the sentinels inf1 and inf2: every real key compares less than
/// inf1, and inf1 < inf2. The public set interface rejects the sentinels, so
/// internal routines may assume real keys are strictly below inf1.
using Key = std::int64_t;

inline constexpr Key kInf1 = std::numeric_limits<Key>::max() - 1;
inline constexpr Key kInf2 = std::numeric_limits<Key>::max();

/// True iff k is neither sentinel.
constexpr bool is_real_key(Key k) noexcept { return k < kInf1; }

}  // namespace versiontree

#endif  // VERSIONTREE_KEY_HPP
