#include <gtest/gtest.h>

#include <deque>
#include <set>

#include "anchorlab/hypergraph.hpp"
#include "anchorlab/rng.hpp"

using namespace anchorlab;
using namespace anchorlab::graph;

namespace {

// Random DAH: edges only point from lower to higher node ids.
Dah random_dah(Rng& rng, std::size_t n, std::size_t m) {
  std::vector<Hyperedge> es;
  for (std::size_t i = 0; i < m; ++i) {
    const NodeId c = 1 + static_cast<NodeId>(rng.index(n - 1));
    Hyperedge e;
    for (std::size_t j = 0, k = 1 + rng.index(3); j < k; ++j) e.premises.push_back(static_cast<NodeId>(rng.index(c)));
    e.conclusion = c;
    es.push_back(e);
  }
  return Dah::with_derived_roots(n, es, static_cast<NodeId>(n - 1));
}

// Worklist closure over premise counters; shares nothing with forward_chain.
std::vector<bool> bfs_closure(const Dah& t) {
  std::vector<bool> known(t.node_count(), false);
  std::vector<std::size_t> missing(t.edges().size());
  std::vector<std::vector<std::size_t>> uses(t.node_count());
  for (std::size_t i = 0; i < t.edges().size(); ++i) {
    missing[i] = t.edges()[i].premises.size();
    for (auto p : t.edges()[i].premises) uses[p].push_back(i);
  }
  std::deque<NodeId> q(t.roots().begin(), t.roots().end());
  for (auto r : t.roots()) known[r] = true;
  while (!q.empty()) {
    const NodeId v = q.front();
    q.pop_front();
    for (auto i : uses[v]) {
      if (--missing[i] == 0 && !known[t.edges()[i].conclusion]) {
        known[t.edges()[i].conclusion] = true;
        q.push_back(t.edges()[i].conclusion);
      }
    }
  }
  return known;
}

void expect_valid_traversal(const Dah& t, const Traversal& tr) {
  ASSERT_EQ(tr.order.size(), t.edges().size());
  std::set<std::size_t> seen(tr.order.begin(), tr.order.end());
  ASSERT_EQ(seen.size(), t.edges().size());
  std::vector<bool> derived(t.node_count(), false);
  for (auto r : t.roots()) derived[r] = true;
  for (std::size_t i = 0; i < tr.fired; ++i) {
    const auto& e = t.edges()[tr.order[i]];
    for (auto p : e.premises) ASSERT_TRUE(derived[p]);
    derived[e.conclusion] = true;
  }
  EXPECT_EQ(derived, bfs_closure(t));
}

}  // namespace

TEST(ForwardChain, AgreesWithWorklistOracle) {
  Rng rng(21);
  for (int t = 0; t < 300; ++t) {
    const Dah d = random_dah(rng, 15, 5 + rng.index(20));
    ASSERT_EQ(forward_chain(d).derived, bfs_closure(d));
    ASSERT_EQ(label(d), bfs_closure(d)[d.query()] ? 1 : 0);
  }
}

TEST(ForwardChain, JointPremisesAreRequired) {
  const Dah d(3, {{{0, 1}, 2}}, 2, {0});
  EXPECT_EQ(label(d), 0);
  const Dah both(3, {{{0, 1}, 2}}, 2, {0, 1});
  EXPECT_EQ(label(both), 1);
}

TEST(Dah, RejectsCyclesAndBadIds) {
  EXPECT_THROW(Dah(2, {{{0}, 1}, {{1}, 0}}, 1, {}), InvariantError);
  EXPECT_THROW(Dah(2, {{{0}, 5}}, 1, {0}), InputError);
  EXPECT_THROW(Dah(2, {{{}, 1}}, 1, {0}), InputError);
  EXPECT_THROW(Dah(2, {{{1}, 1}}, 1, {0}), InputError);
}

TEST(Derivation, EdgesDeriveTheQueryOnTheirOwn) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const Dah d = random_dah(rng, 12, 15);
    const auto es = derivation_edges(d);
    if (!label(d)) {
      EXPECT_TRUE(es.empty());
      continue;
    }
    std::vector<Hyperedge> sub;
    for (auto e : es) sub.push_back(d.edges()[e]);
    EXPECT_EQ(label(Dah(d.node_count(), sub, d.query(), d.roots())), 1);
  }
}

TEST(Intervention, RemovingAChainEdgeCutsAChain) {
  // 0 -> 1 -> 2 -> 3 plus a distractor 1 -> 4.
  const Dah d(5, {{{0}, 1}, {{1}, 2}, {{2}, 3}, {{1}, 4}}, 3, {0});
  EXPECT_EQ(label(d), 1);
  for (std::size_t e = 0; e < 3; ++e) EXPECT_EQ(label(apply_intervention(d, {InterventionKind::EdgeRemoval, e, {}})), 0);
  EXPECT_EQ(label(apply_intervention(d, {InterventionKind::EdgeRemoval, 3, {}})), 1);
}

TEST(Intervention, RemovalKeepsRootsFixed) {
  const Dah d(3, {{{0}, 1}, {{1}, 2}}, 2, {0});
  const Dah cut = apply_intervention(d, {InterventionKind::EdgeRemoval, 0, {}});
  EXPECT_EQ(cut.roots(), std::vector<NodeId>{0});
  EXPECT_EQ(label(cut), 0);
}

TEST(Intervention, PremiseKinds) {
  const Dah d(4, {{{0, 1}, 2}, {{2}, 3}}, 3, {0, 1});
  EXPECT_EQ(label(apply_intervention(d, {InterventionKind::PremiseRemoval, 0, NodeId{1}})), 0);
  EXPECT_EQ(label(apply_intervention(d, {InterventionKind::FalsePremise, 0, NodeId{0}})), 0);
  EXPECT_EQ(label(apply_intervention(d, {InterventionKind::FalseConclusion, 1, {}})), 0);
  EXPECT_THROW(apply_intervention(d, {InterventionKind::PremiseRemoval, 1, NodeId{0}}), InputError);
  EXPECT_EQ(to_string(InterventionKind::FalseConclusion), "false-conclusion");
}

TEST(Traversal, CoversEveryEdgeOnceAndFiresValidly) {
  Rng rng(8);
  for (int t = 0; t < 300; ++t) {
    const Dah d = random_dah(rng, 14, 4 + rng.index(20));
    expect_valid_traversal(d, dfs_trajectory(d));
  }
}

TEST(Traversal, ChainEndsWithQueryEdgeAfterDistractors) {
  // 0 -> 1 -> 2 (query), distractors 0 -> 3, 1 -> 4, and an unfireable 5 -> 4.
  const Dah d(6, {{{1}, 2}, {{0}, 3}, {{0}, 1}, {{1}, 4}, {{5}, 4}}, 2, {0});
  const auto tr = dfs_trajectory(d);
  EXPECT_EQ(tr.order, (std::vector<std::size_t>{1, 2, 3, 0, 4}));
  EXPECT_EQ(tr.fired, 4u);
  EXPECT_EQ(d.edges()[tr.order[tr.fired - 1]].conclusion, d.query());
}

TEST(Traversal, Deterministic) {
  Rng a(99), b(99);
  const Dah d1 = random_dah(a, 12, 18), d2 = random_dah(b, 12, 18);
  EXPECT_EQ(dfs_trajectory(d1).order, dfs_trajectory(d2).order);
}
