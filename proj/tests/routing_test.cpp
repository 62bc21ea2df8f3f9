#include <gtest/gtest.h>

#include "cascade/random.hpp"
#include "cascade/resilience.hpp"
#include "cascade/routing.hpp"
#include "fixtures.hpp"

namespace cascade {
namespace {

TEST(Proportional, Example1OriginSplit) {
  auto net = fixtures::example1();
  auto policy = proportional_policy(net);
  auto x = policy->split(0, 0b11, 4.0);
  EXPECT_DOUBLE_EQ(x[0], 2.0);
  EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(Proportional, SingleActiveLinkTakesEverything) {
  auto net = fixtures::example1();
  auto policy = proportional_policy(net);
  auto x = policy->split(1, 0b10, 3.0);
  EXPECT_DOUBLE_EQ(x[0], 0.0);
  EXPECT_DOUBLE_EQ(x[1], 3.0);
}

TEST(Proportional, CapacityWeights) {
  auto net = fixtures::two_parallel(3, 1, 4);
  auto x = proportional_policy(net)->split(0, 0b11, 4.0);
  EXPECT_DOUBLE_EQ(x[0], 3.0);
  EXPECT_DOUBLE_EQ(x[1], 1.0);
}

TEST(LinkMonotonicity, ProportionalOnRandomNetworks) {
  random::Rng rng(3);
  for (int i = 0; i < 40; ++i) {
    auto net = random::random_dag(rng);
    auto report = check_link_monotonicity(*proportional_policy(net), net);
    EXPECT_TRUE(report.passed()) << "net " << i;
  }
}

// Splits evenly over all three links, but a two-link subset sends
// everything to its lower link, so losing one link starves another.
class PerverseTable final : public RoutingPolicy {
 public:
  PolicyKind kind() const override { return PolicyKind::Table; }
  std::vector<double> split(NodeId, LocalMask active, double mu) const override {
    std::vector<double> x(3, 0.0);
    const auto m = members(active);
    if (m.size() == 2) {
      x[m.front()] = mu;
    } else {
      for (std::size_t i : m) x[i] = mu / double(m.size());
    }
    return x;
  }
};

TEST(LinkMonotonicity, WitnessesReplay) {
  FlowNetwork net(2, {{"a", 0, 1, 1}, {"b", 0, 1, 1}, {"c", 0, 1, 1}}, 1.0);
  PerverseTable policy;
  auto report = check_link_monotonicity(policy, net);
  ASSERT_FALSE(report.passed());
  for (const auto& w : report.witnesses) EXPECT_TRUE(replay(w, report.property, policy, report.threshold));
}

TEST(LinkMonotonicity, DegreeTwoAlwaysPasses) {
  FlowNetwork net(2, {{"a", 0, 1, 1}, {"b", 0, 1, 3}}, 1.0);
  TablePolicy table(net, {{0, {"a", "b"}, {{0.0, {0.0, 0.0}}, {2.0, {1.5, 0.5}}}},
                          {0, {"a"}, {{1.0, {1.0}}}},
                          {0, {"b"}, {{1.0, {1.0}}}}});
  EXPECT_TRUE(check_link_monotonicity(table, net).passed());
}

TEST(LinkMonotonicity, BpaOnDegreeThreeNetworks) {
  random::Rng rng(8);
  int checked = 0;
  for (int i = 0; i < 12; ++i) {
    auto net = random::random_tree(rng, 7, 3);
    auto policy = bpa_policy(bpa_compute(net));
    GridOptions grid;
    grid.points = 41;
    auto report = check_link_monotonicity(*policy, net, grid);
    EXPECT_TRUE(report.passed()) << "net " << i;
    ++checked;
  }
  EXPECT_EQ(checked, 12);
}

TEST(FlowMonotonicity, Example2NodeOneViolation) {
  auto net = fixtures::example2();
  auto policy = bpa_policy(bpa_compute(net));
  GridOptions grid;
  grid.points = 401;  // step 0.0125 on [0, 5]
  auto report = check_flow_monotonicity(*policy, net, grid);
  ASSERT_FALSE(report.passed());
  bool found = false;
  for (const auto& w : report.witnesses) {
    EXPECT_TRUE(replay(w, report.property, *policy, report.threshold));
    if (w.node == 1 && w.link == 0 && w.mu_low >= 1.9 - 1e-9 && w.mu_high <= 2.0 + 1e-9) found = true;
  }
  EXPECT_TRUE(found);
  // the full-set split itself: 0.4 at 1.9, falling on [1.9, 2]
  EXPECT_NEAR(policy->full_split(1, 1.9)[0], 0.4, 1e-6);
  EXPECT_LT(policy->full_split(1, 2.0)[0], policy->full_split(1, 1.95)[0]);
}

TEST(FlowMonotonicity, SingleLinkNodesPass) {
  FlowNetwork chain(3, {{"a", 0, 1, 2}, {"b", 1, 2, 1}}, 0.5);
  auto policy = bpa_policy(bpa_compute(chain));
  EXPECT_TRUE(check_flow_monotonicity(*policy, chain).passed());
}

TEST(FlowMonotonicity, LeafBesidePairWithLargerLeaf) {
  // node 1: e2 straight to the destination (C2 = 2), e3 (C1 = 1.5) into a
  // node with two links to the destination
  FlowNetwork net(4, {{"e1", 0, 1, 5}, {"e2", 1, 3, 2}, {"e3", 1, 2, 1.5}, {"e4", 2, 3, 1}, {"e5", 2, 3, 1}}, 1.0);
  auto policy = bpa_policy(bpa_compute(net));
  auto report = check_flow_monotonicity(*policy, net);
  EXPECT_TRUE(report.passed());
}

TEST(TablePolicy, InterpolatesAndScales) {
  FlowNetwork net(2, {{"a", 0, 1, 2}, {"b", 0, 1, 2}}, 1.0);
  TablePolicy table(net, {{0, {"a", "b"}, {{1.0, {1.0, 0.0}}, {3.0, {1.0, 2.0}}}},
                          {0, {"a"}, {{1.0, {1.0}}}},
                          {0, {"b"}, {{1.0, {1.0}}}}});
  auto mid = table.split(0, 0b11, 2.0);
  EXPECT_DOUBLE_EQ(mid[0], 1.0);
  EXPECT_DOUBLE_EQ(mid[1], 1.0);
  auto low = table.split(0, 0b11, 0.5);
  EXPECT_DOUBLE_EQ(low[0], 0.5);
  auto high = table.split(0, 0b11, 6.0);
  EXPECT_DOUBLE_EQ(high[0], 2.0);
  EXPECT_DOUBLE_EQ(high[1], 4.0);
  EXPECT_DOUBLE_EQ(table.split(0, 0b01, 0.7)[0], 0.7);
}

TEST(TablePolicy, MissingSubsetIsAnError) {
  FlowNetwork net(2, {{"a", 0, 1, 2}, {"b", 0, 1, 2}}, 1.0);
  try {
    TablePolicy table(net, {{0, {"a", "b"}, {{1.0, {0.5, 0.5}}}}, {0, {"a"}, {{1.0, {1.0}}}}});
    FAIL() << "expected MissingPolicyEntry";
  } catch (const CascadeError& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingPolicyEntry);
  }
}

TEST(TablePolicy, NonConservingSampleRejected) {
  FlowNetwork net(2, {{"a", 0, 1, 2}}, 1.0);
  EXPECT_THROW(TablePolicy(net, {{0, {"a"}, {{1.0, {0.9}}}}}), CascadeError);
}

}  // namespace
}  // namespace cascade
