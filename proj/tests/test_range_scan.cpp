// SPDX-License-Identifier: MIT
//
// Range scans: phase management, snapshot traversal, scan-side helping,
// and version-tree reconstruction.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "versiontree/versiontree.hpp"

using namespace versiontree;

namespace {

std::vector<Key> oracle_range(const std::set<Key>& s, Key a, Key b) {
  std::vector<Key> out;
  for (auto it = s.lower_bound(a); it != s.end() && *it <= b; ++it) out.push_back(*it);
  return out;
}

// Freezes the root with the descriptor of an insert(k) built by hand, in the
// given starting state, and returns the descriptor. Mimics an updater that
// got exactly as far as its first freeze CAS (plus, optionally, winning the
// handshake) before being suspended.
InfoObject* freeze_root_with_pending_insert(Tree& t, Key k, InfoState start) {
  Internal* root = t.root();
  Leaf* l = as_leaf(root->left.load());
  UpdateWord unfrozen = UpdateWord::make(UpdateTag::flag, t.dummy());
  std::uint64_t seq = t.counter().value.load();
  Leaf* fresh = t.arena().make_node<Leaf>(k, unfrozen, nullptr, seq);
  Leaf* sib = t.arena().make_node<Leaf>(l->key, unfrozen, nullptr, seq);
  Internal* repl = t.arena().make_node<Internal>(std::max(k, l->key), unfrozen,
                                                 k < l->key ? (NodeBase*)fresh : sib,
                                                 k < l->key ? (NodeBase*)sib : fresh, l, seq);
  InfoObject* infp = t.arena().make_info(
      std::vector<NodeBase*>{root, l},
      std::vector<UpdateWord>{root->update.load(), l->update.load()},
      std::vector<NodeBase*>{l}, root, l, repl, seq);
  if (start != InfoState::bottom) {
    InfoState expect = InfoState::bottom;
    REQUIRE(infp->state.compare_exchange_strong(expect, start));
  }
  UpdateWord expected = infp->old_update[0];
  REQUIRE(root->update.compare_exchange_strong(expected,
                                               UpdateWord::make(UpdateTag::flag, infp)));
  return infp;
}

}  // namespace

TEST_CASE("range_scan on the fresh tree is empty and advances the phase") {
  auto t = init_tree();
  CHECK(t->range_scan(0, 100).empty());
  CHECK(t->counter().value.load() == 1);
  CHECK(t->range_scan(0, 100).empty());
  CHECK(t->counter().value.load() == 2);
}

TEST_CASE("range_scan returns the keys inside an inclusive window") {
  auto t = init_tree();
  for (Key k : {1, 3, 5, 7}) REQUIRE(t->insert(k));
  CHECK(t->range_scan(2, 6) == std::vector<Key>{3, 5});
  CHECK(t->range_scan(3, 5) == std::vector<Key>{3, 5});
  CHECK(t->range_scan(1, 7) == std::vector<Key>{1, 3, 5, 7});
  CHECK(t->range_scan(4, 4).empty());
  CHECK(t->range_scan(5, 5) == std::vector<Key>{5});
  CHECK(t->range_scan(6, 2).empty());  // inverted interval
}

TEST_CASE("scan_helper filters a single leaf by the window") {
  auto t = init_tree();
  Leaf l(5, UpdateWord::make(UpdateTag::flag, t->dummy()), nullptr, 0);
  CHECK(t->scan_helper(&l, 0, 2, 6) == std::vector<Key>{5});
  CHECK(t->scan_helper(&l, 0, 6, 9).empty());
  CHECK(t->scan_helper(&l, 0, 5, 5) == std::vector<Key>{5});
}

TEST_CASE("scan aborts a pending update that has not won its handshake") {
  auto t = init_tree();
  InfoObject* infp = freeze_root_with_pending_insert(*t, 5, InfoState::bottom);

  // The scan moves the counter first, so the stalled phase-0 insert loses
  // the handshake when the scan helps it: abort, key not in the result.
  CHECK(t->range_scan(0, 100).empty());
  CHECK(infp->state.load() == InfoState::abort);
  CHECK(t->root()->left.load()->is_leaf());
}

TEST_CASE("scan completes a pending update that already won its handshake") {
  auto t = init_tree();
  InfoObject* infp = freeze_root_with_pending_insert(*t, 5, InfoState::try_);

  // State Try means the updater's own help call read the counter before this
  // scan bumped it. The scan-side help must push the insert through, and the
  // new phase-0 leaf lands inside the scan's snapshot.
  CHECK(t->range_scan(0, 100) == std::vector<Key>{5});
  CHECK(infp->state.load() == InfoState::commit);
  CHECK_FALSE(t->root()->left.load()->is_leaf());
}

TEST_CASE("scan results match the oracle across random sequential histories") {
  auto t = init_tree();
  std::set<Key> oracle;
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<Key> key_dist(0, 80);
  for (int i = 0; i < 3000; ++i) {
    Key k = key_dist(rng);
    switch (rng() % 4) {
      case 0:
        CHECK(t->insert(k) == oracle.insert(k).second);
        break;
      case 1:
        CHECK(t->delete_key(k) == (oracle.erase(k) == 1));
        break;
      case 2:
        CHECK((t->find(k) != nullptr) == (oracle.count(k) == 1));
        break;
      default: {
        Key b = std::min<Key>(k + static_cast<Key>(rng() % 20), kInf1 - 1);
        CHECK(t->range_scan(k, b) == oracle_range(oracle, k, b));
        break;
      }
    }
  }
}

TEST_CASE("reconstruction separates keys by the phase that admitted them") {
  auto t = init_tree();
  REQUIRE(t->insert(5));                 // phase 0
  CHECK(t->range_scan(0, 100) == std::vector<Key>{5});  // opens phase 1
  REQUIRE(t->insert(9));                 // phase 1

  VersionTree t0 = reconstruct_version_tree(*t, 0);
  VersionTree t1 = reconstruct_version_tree(*t, 1);
  CHECK(inspect::collect_keys(t0) == std::vector<Key>{5});
  CHECK(inspect::collect_keys(t1) == std::vector<Key>{5, 9});
}

TEST_CASE("every named version stays frozen while later phases mutate") {
  auto t = init_tree();
  std::set<Key> oracle;
  std::map<std::uint64_t, std::vector<Key>> content_at_phase_end;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<Key> key_dist(0, 50);

  for (int i = 0; i < 1200; ++i) {
    if (i % 40 == 39) {
      // End the current phase with a scan; the oracle content at this
      // moment is the version the phase number will forever name.
      std::uint64_t phase = t->counter().value.load();
      content_at_phase_end[phase] = std::vector<Key>(oracle.begin(), oracle.end());
      t->range_scan(0, 100);
      continue;
    }
    Key k = key_dist(rng);
    if (rng() % 2)
      CHECK(t->insert(k) == oracle.insert(k).second);
    else
      CHECK(t->delete_key(k) == (oracle.erase(k) == 1));
  }
  std::uint64_t top = t->counter().value.load();
  content_at_phase_end[top] = std::vector<Key>(oracle.begin(), oracle.end());

  for (auto& [phase, expected] : content_at_phase_end) {
    VersionTree vt = reconstruct_version_tree(*t, phase);
    auto rep = inspect::audit_leaf_oriented_bst(vt);
    CAPTURE(phase, rep.issues);
    CHECK(rep.ok);
    CHECK(inspect::collect_keys(vt) == expected);
  }
}

TEST_CASE("reconstruction rejects phases beyond the counter") {
  auto t = init_tree();
  CHECK_THROWS_AS(reconstruct_version_tree(*t, 3), std::logic_error);
}
