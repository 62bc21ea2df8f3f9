#include <gtest/gtest.h>

#include "cascade/random.hpp"
#include "cascade/routing.hpp"
#include "cascade/structural.hpp"
#include "fixtures.hpp"

namespace cascade {
namespace {

NodeVerdict verdict_at(const FlowNetwork& net, NodeId v) {
  for (const auto& n : structural_flow_monotonicity(net).nodes) {
    if (n.node == v) return n;
  }
  ADD_FAILURE() << "no verdict for node " << v;
  return {};
}

// Node 1 sits below a single origin link; the destination is the last node.
TEST(Structural, TwoLeaves) {
  FlowNetwork net(3, {{"e1", 0, 1, 5}, {"e2", 1, 2, 1}, {"e3", 1, 2, 2}}, 1.0);
  auto v = verdict_at(net, 1);
  EXPECT_EQ(v.verdict, StructuralVerdict::ProvenMonotone);
  EXPECT_EQ(v.pattern, "two-leaves");
  EXPECT_EQ(verdict_at(net, 0).pattern, "single-link");
}

// node 1: a leaf of capacity `leaf` beside a link of capacity 1.5 into a pair
FlowNetwork leaf_and_pair(double leaf) {
  return FlowNetwork(4, {{"e1", 0, 1, 5}, {"e2", 1, 3, leaf}, {"e3", 1, 2, 1.5}, {"e4", 2, 3, 0.5}, {"e5", 2, 3, 0.5}},
                     1.0);
}

TEST(Structural, LeafAndPairNeedsLargerLeaf) {
  auto ok = verdict_at(leaf_and_pair(2.0), 1);
  EXPECT_EQ(ok.verdict, StructuralVerdict::ProvenMonotone);
  EXPECT_EQ(ok.pattern, "leaf-and-pair");
  EXPECT_EQ(verdict_at(leaf_and_pair(1.5), 1).verdict, StructuralVerdict::ProvenMonotone);
  EXPECT_EQ(verdict_at(leaf_and_pair(1.0), 1).verdict, StructuralVerdict::Unknown);
}

FlowNetwork two_pairs(double c1, double c2) {
  return FlowNetwork(5,
                     {{"e1", 0, 1, 5},
                      {"e2", 1, 2, c1},
                      {"e3", 1, 3, c2},
                      {"e4", 2, 4, 0.5},
                      {"e5", 2, 4, 0.6},
                      {"e6", 3, 4, 0.7},
                      {"e7", 3, 4, 0.4}},
                     1.0);
}

TEST(Structural, EqualPairs) {
  auto v = verdict_at(two_pairs(1.5, 1.5), 1);
  EXPECT_EQ(v.verdict, StructuralVerdict::ProvenMonotone);
  EXPECT_EQ(v.pattern, "equal-pairs");
  EXPECT_EQ(verdict_at(two_pairs(1.5, 1.6), 1).verdict, StructuralVerdict::Unknown);
}

TEST(Structural, ChainRuleKeepsTwoLeaves) {
  // e2 -> e4 is a chain whose minimum capacity (1) is the end link
  FlowNetwork net(4, {{"e1", 0, 1, 5}, {"e2", 1, 2, 3}, {"e3", 1, 3, 2}, {"e4", 2, 3, 1}}, 1.0);
  auto v = verdict_at(net, 1);
  EXPECT_EQ(v.verdict, StructuralVerdict::ProvenMonotone);
  EXPECT_EQ(v.pattern, "two-leaves");
  // the chain's own S_e is [C_e - μ]^+ for the chain minimum
  ResilienceOracle oracle(net);
  for (double mu : mu_grid(1.0, 21)) EXPECT_NEAR(oracle.node_curve(2)(mu), std::max(1.0 - mu, 0.0), 1e-9);
}

TEST(Structural, LeafEquivalentSubtreeCountsAsLeaf) {
  // e3 (capacity 0.4) leads into a pair whose value at 0 is 2 > 0.4, so the
  // whole branch behaves like a leaf and node 1 has two leaves.
  FlowNetwork net(4, {{"e1", 0, 1, 5}, {"e2", 1, 3, 1}, {"e3", 1, 2, 0.4}, {"e4", 2, 3, 1}, {"e5", 2, 3, 1}}, 0.3);
  EXPECT_EQ(verdict_at(net, 1).pattern, "two-leaves");
}

TEST(Structural, ThreeWayNodesAreUnknown) {
  FlowNetwork net(3, {{"e1", 0, 1, 5}, {"e2", 1, 2, 1}, {"e3", 1, 2, 1}, {"e4", 1, 2, 1}}, 1.0);
  EXPECT_EQ(verdict_at(net, 1).verdict, StructuralVerdict::Unknown);
}

TEST(Structural, NotATree) {
  FlowNetwork diamond(5, {{"a", 0, 1, 1}, {"b", 0, 2, 1}, {"c", 1, 3, 1}, {"d", 2, 3, 1}, {"e", 3, 4, 1}}, 0.5);
  try {
    structural_flow_monotonicity(diamond);
    FAIL() << "expected NotATree";
  } catch (const CascadeError& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotATree);
  }
}

TEST(Structural, GeneratedTreesAreProvenBelowOrigin) {
  random::Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    auto net = random::random_monotone_tree(rng);
    EXPECT_TRUE(structural_flow_monotonicity(net).below_origin_proven()) << "tree " << i;
  }
}

// Proven nodes never show a numerical flow-monotonicity violation.
TEST(Structural, CrossValidationAgainstChecker) {
  random::Rng rng(9);
  std::size_t proven = 0;
  for (int i = 0; i < 25; ++i) {
    auto net = i % 2 ? random::random_monotone_tree(rng) : random::random_tree(rng, 8, 2);
    auto oracle = bpa_compute(net);
    auto report = structural_flow_monotonicity(net, *oracle);
    auto policy = bpa_policy(oracle);
    GridOptions grid;
    grid.points = 101;
    auto check = check_flow_monotonicity(*policy, net, grid);
    for (const auto& n : report.nodes) {
      if (n.node == net.origin() || n.verdict != StructuralVerdict::ProvenMonotone) continue;
      ++proven;
      for (const auto& w : check.witnesses) EXPECT_NE(w.node, n.node) << "tree " << i << " pattern " << n.pattern;
    }
  }
  EXPECT_GT(proven, 25u);
}

}  // namespace
}  // namespace cascade
