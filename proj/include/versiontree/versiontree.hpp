// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_VERSIONTREE_HPP
#define VERSIONTREE_VERSIONTREE_HPP

/// \file
/// Umbrella header for the versiontree library: a concurrent ordered set
/// over a persistent binary search tree. Updates are lock-free, membership
/// queries are lock-free, and range scans are wait-free, reading a named
/// version of the tree while updates continue.

#include "arena.hpp"       // IWYU pragma: export
#include "assert.hpp"      // IWYU pragma: export
#include "hooks.hpp"       // IWYU pragma: export
#include "inspect.hpp"     // IWYU pragma: export
#include "key.hpp"         // IWYU pragma: export
#include "node.hpp"        // IWYU pragma: export
#include "ordered_set.hpp" // IWYU pragma: export
#include "tree.hpp"        // IWYU pragma: export

#endif  // VERSIONTREE_VERSIONTREE_HPP
