// SPDX-License-Identifier: MIT
//
// Write-side machinery: child CAS, the execute/help descriptor protocol,
// insert and delete.

#include <set>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "versiontree/versiontree.hpp"

using namespace versiontree;

namespace {

struct HelpCounter final : ExecutionHooks {
  int helps = 0;
  void on_help(int, const InfoObject&, HelpReason) override { ++helps; }
};

// The plan insert(k) would submit on a tree whose search for k found (p, l),
// with update witnesses sampled right now. Nodes go through the tree's arena
// so later whole-tree walks see them.
ExecutePlan make_insert_plan(Tree& t, Internal* p, Leaf* l, Key k) {
  UpdateWord unfrozen = UpdateWord::make(UpdateTag::flag, t.dummy());
  std::uint64_t seq = t.counter().value.load();
  Leaf* fresh = t.arena().make_node<Leaf>(k, unfrozen, nullptr, seq);
  Leaf* sib = t.arena().make_node<Leaf>(l->key, unfrozen, nullptr, seq);
  Internal* repl =
      k < l->key ? t.arena().make_node<Internal>(l->key, unfrozen, fresh, sib, l, seq)
                 : t.arena().make_node<Internal>(k, unfrozen, sib, fresh, l, seq);
  ExecutePlan plan;
  plan.nodes = {p, l};
  plan.old_update = {p->update.load(), l->update.load()};
  plan.mark = {l};
  plan.par = p;
  plan.old_child = l;
  plan.new_child = repl;
  plan.seq = seq;
  return plan;
}

}  // namespace

TEST_CASE("cas_child swings the designated cell once") {
  auto t = init_tree();
  Internal* root = t->root();
  NodeBase* l = root->left.load();
  UpdateWord unfrozen = UpdateWord::make(UpdateTag::flag, t->dummy());

  Leaf x(4, unfrozen, l, 0);
  t->cas_child(root, l, &x);
  CHECK(root->left.load() == &x);

  // Replayed CAS finds the cell changed and fails silently.
  t->cas_child(root, l, &x);
  CHECK(root->left.load() == &x);

  // A replacement keyed >= parent targets the right cell.
  NodeBase* r = root->right.load();
  Leaf y(kInf2, unfrozen, r, 0);
  t->cas_child(root, r, &y);
  CHECK(root->right.load() == &y);
  CHECK(root->left.load() == &x);
}

TEST_CASE("execute commits an uncontended insert plan") {
  auto t = init_tree();
  Internal* root = t->root();
  Leaf* l = as_leaf(root->left.load());
  ExecutePlan plan = make_insert_plan(*t, root, l, 5);

  CHECK(t->execute(plan));
  NodeBase* nl = root->left.load();
  CHECK(nl == plan.new_child);
  REQUIRE_FALSE(nl->is_leaf());
  CHECK(nl->key == kInf1);
  CHECK(nl->prev == l);
  CHECK(as_internal(nl)->left.load()->key == 5);
  CHECK(as_internal(nl)->right.load()->key == kInf1);

  // The descriptor committed; the displaced leaf stays marked for it.
  UpdateWord lw = l->update.load();
  CHECK(lw.tag() == UpdateTag::mark);
  CHECK(lw.info()->state.load() == InfoState::commit);
  CHECK(frozen(lw));  // mark + commit stays frozen forever
  CHECK_FALSE(frozen(root->update.load()));
}

TEST_CASE("execute with a stale witness fails without touching any cell") {
  auto t = init_tree();
  Internal* root = t->root();
  Leaf* l0 = as_leaf(root->left.load());
  ExecutePlan plan = make_insert_plan(*t, root, l0, 5);

  // Another insert completes between witness sampling and execute; the
  // witnesses in plan are now stale but not frozen.
  REQUIRE(t->insert(1));
  UpdateWord root_word = root->update.load();
  REQUIRE_FALSE(root_word == plan.old_update[0]);

  CHECK_FALSE(t->execute(plan));
  CHECK(root->update.load() == root_word);  // freeze CAS failed, cell untouched
  CHECK(root->left.load() != plan.new_child);
}

TEST_CASE("execute declines a plan whose witness is terminally mark-frozen") {
  HelpCounter hooks;
  auto t = init_tree(&hooks);
  REQUIRE(t->insert(5));
  REQUIRE(t->delete_key(5));

  // The delete marked the internal node it removed; that mark is permanent
  // (its descriptor committed). A plan witnessing it must fail fast and must
  // not help the terminal descriptor.
  Internal* removed = nullptr;
  t->arena().for_each_node([&](NodeBase& n) {
    if (!n.is_leaf() && n.key == kInf1 && n.update.load().tag() == UpdateTag::mark)
      removed = static_cast<Internal*>(&n);
  });
  REQUIRE(removed != nullptr);
  UpdateWord mw = removed->update.load();
  REQUIRE(frozen(mw));
  REQUIRE(mw.info()->state.load() == InfoState::commit);

  Leaf replacement(kInf1, UpdateWord::make(UpdateTag::flag, t->dummy()), removed, 0);
  ExecutePlan plan;
  plan.nodes = {removed};
  plan.old_update = {mw};
  plan.mark = {removed};
  plan.par = removed;
  plan.old_child = removed;
  plan.new_child = &replacement;
  plan.seq = t->counter().value.load();

  hooks.helps = 0;
  CHECK_FALSE(t->execute(plan));
  CHECK(hooks.helps == 0);
}

TEST_CASE("help commits a same-phase descriptor end to end") {
  auto t = init_tree();
  Internal* root = t->root();
  Leaf* l = as_leaf(root->left.load());
  ExecutePlan plan = make_insert_plan(*t, root, l, 7);
  InfoObject* infp =
      t->arena().make_info(plan.nodes, plan.old_update, plan.mark, plan.par,
                           plan.old_child, plan.new_child, plan.seq);
  UpdateWord expected = plan.old_update[0];
  REQUIRE(root->update.compare_exchange_strong(expected,
                                               UpdateWord::make(UpdateTag::flag, infp)));

  CHECK(t->help(infp));
  CHECK(infp->state.load() == InfoState::commit);
  CHECK(root->left.load() == plan.new_child);
  CHECK(l->update.load() == UpdateWord::make(UpdateTag::mark, infp));
}

TEST_CASE("help aborts a descriptor from a phase the counter has left") {
  auto t = init_tree();
  Internal* root = t->root();
  Leaf* l = as_leaf(root->left.load());
  ExecutePlan plan = make_insert_plan(*t, root, l, 7);
  REQUIRE(plan.seq == 0);
  InfoObject* infp =
      t->arena().make_info(plan.nodes, plan.old_update, plan.mark, plan.par,
                           plan.old_child, plan.new_child, plan.seq);
  UpdateWord expected = plan.old_update[0];
  REQUIRE(root->update.compare_exchange_strong(expected,
                                               UpdateWord::make(UpdateTag::flag, infp)));

  // A scan opens phase 1 before anyone helps: the handshake must abort.
  CHECK(t->range_scan(0, 100).empty());
  REQUIRE(t->counter().value.load() == 1);

  CHECK_FALSE(t->help(infp));
  CHECK(infp->state.load() == InfoState::abort);
  // The freeze stays written but no longer freezes anything.
  CHECK(root->update.load() == UpdateWord::make(UpdateTag::flag, infp));
  CHECK_FALSE(frozen(root->update.load()));
  CHECK(root->left.load() == l);  // child CAS never ran
}

TEST_CASE("insert builds the documented three-node subtree") {
  auto t = init_tree();
  CHECK(t->insert(5));
  NodeBase* nl = t->root()->left.load();
  REQUIRE_FALSE(nl->is_leaf());
  CHECK(nl->key == kInf1);
  NodeBase* a = as_internal(nl)->left.load();
  NodeBase* b = as_internal(nl)->right.load();
  REQUIRE(a->is_leaf());
  REQUIRE(b->is_leaf());
  CHECK(a->key == 5);
  CHECK(b->key == kInf1);

  CHECK_FALSE(t->insert(5));  // cannot insert duplicate key
  CHECK(t->insert(3));
  CHECK(t->insert(7));
  CHECK_FALSE(t->insert(3));
  CHECK_FALSE(t->insert(7));
}

TEST_CASE("delete removes a leaf by swinging in a copied sibling") {
  auto t = init_tree();
  CHECK_FALSE(t->delete_key(5));  // key not in the tree

  REQUIRE(t->insert(5));
  Internal* removed = as_internal(t->root()->left.load());
  CHECK(t->delete_key(5));
  CHECK_FALSE(t->delete_key(5));

  NodeBase* nl = t->root()->left.load();
  REQUIRE(nl->is_leaf());
  CHECK(nl->key == kInf1);
  // The new leaf is a fresh copy of the sibling; its prev names the removed
  // internal node, which in turn still chains to the original leaf.
  CHECK(nl->prev == removed);
  CHECK(removed->prev != nullptr);
  CHECK(removed->prev->key == kInf1);
  CHECK(removed->prev->is_leaf());
}

TEST_CASE("delete copies an internal sibling with its current children") {
  auto t = init_tree();
  REQUIRE(t->insert(5));
  REQUIRE(t->insert(3));
  REQUIRE(t->insert(8));
  // Left subtree now: internal(inf1)[ internal(5)[ leaf 3, internal(8)[5, 8] ],
  // leaf inf1 ]. Deleting 3 removes internal(5) and must copy its sibling
  // internal(8) rather than re-link it.
  Internal* sub5 = as_internal(as_internal(t->root()->left.load())->left.load());
  REQUIRE(sub5->key == 5);
  Internal* sib = as_internal(sub5->right.load());
  REQUIRE(sib->key == 8);

  REQUIRE(t->delete_key(3));
  NodeBase* after = as_internal(t->root()->left.load())->left.load();
  REQUIRE_FALSE(after->is_leaf());
  CHECK(after->key == 8);
  CHECK(after != sib);        // fresh copy, never a re-link
  CHECK(after->prev == sub5); // copy supersedes the removed parent
  CHECK(as_internal(after)->left.load() == sib->left.load());
  CHECK(as_internal(after)->right.load() == sib->right.load());

  std::uint64_t seq = t->counter().value.load();
  VersionTree vt = reconstruct_version_tree(*t, seq);
  CHECK(inspect::collect_keys(vt) == std::vector<Key>{5, 8});
}

TEST_CASE("interleaved inserts and deletes track the sorted-set oracle") {
  auto t = init_tree();
  std::set<Key> oracle;
  std::mt19937_64 rng(123456789);
  std::uniform_int_distribution<Key> key_dist(0, 99);
  for (int i = 0; i < 10000; ++i) {
    Key k = key_dist(rng);
    switch (rng() % 3) {
      case 0:
        CHECK(t->insert(k) == oracle.insert(k).second);
        break;
      case 1:
        CHECK(t->delete_key(k) == (oracle.erase(k) == 1));
        break;
      default:
        CHECK((t->find(k) != nullptr) == (oracle.count(k) == 1));
        break;
    }
  }
  VersionTree vt = reconstruct_version_tree(*t, t->counter().value.load());
  CHECK(inspect::collect_keys(vt) == std::vector<Key>(oracle.begin(), oracle.end()));
  auto rep = inspect::audit_leaf_oriented_bst(vt);
  CAPTURE(rep.issues);
  CHECK(rep.ok);
}
