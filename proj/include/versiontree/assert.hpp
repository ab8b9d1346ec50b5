// SPDX-License-Identifier: MIT
#ifndef VERSIONTREE_ASSERT_HPP
#define VERSIONTREE_ASSERT_HPP

#include <cstdio>
#include <cstdlib>

// Always-on invariant assertion. The protocol preconditions this guards are
// cheap pointer and integer checks, and a silent violation would corrupt the
// shared structure, so they stay active in release builds too.
#define VT_ASSERT(cond)                                                        \
  do {                                                                         \
    if (!(cond)) {                                                             \
      std::fprintf(stderr, "versiontree: assertion failed: %s (%s:%d)\n",      \
                   #cond, __FILE__, __LINE__);                                 \
      std::abort();                                                            \
    }                                                                          \
  } while (0)

#endif  // VERSIONTREE_ASSERT_HPP
