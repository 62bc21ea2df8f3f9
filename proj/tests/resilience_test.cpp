#include <gtest/gtest.h>

#include "cascade/resilience.hpp"
#include "fixtures.hpp"

namespace cascade {
namespace {

// Independent oracle for the two-link value: brute-force maximin on a fine grid.
double two_link_bruteforce(double c1, double c2, double mu) {
  double best = 0.0;
  const int n = 20000;
  for (int i = 0; i <= n; ++i) {
    const double x1 = mu * i / n, x2 = mu - x1;
    if (x1 > c1 || x2 > c2) continue;
    const double kill1 = std::max(c1 - x1, 0.0) + std::max(c2 - mu, 0.0);
    const double kill2 = std::max(c2 - x2, 0.0) + std::max(c1 - mu, 0.0);
    best = std::max(best, std::min(kill1, kill2));
  }
  return best;
}

TEST(TwoLinkClosedForm, ReferenceValues) {
  auto a = two_link_closed_form(10, 14, 4);
  EXPECT_DOUBLE_EQ(a.r_star, 18.0);
  EXPECT_DOUBLE_EQ(*a.x1, 2.0);
  auto b = two_link_closed_form(10, 14, 12);
  EXPECT_DOUBLE_EQ(b.r_star, 7.0);
  EXPECT_DOUBLE_EQ(*b.x1, 5.0);
  EXPECT_DOUBLE_EQ(two_link_closed_form(3, 3, 6).r_star, 0.0);
}

TEST(TwoLinkClosedForm, MatchesBruteForce) {
  for (double mu : {0.0, 1.0, 4.0, 9.9, 10.0, 12.0, 14.0, 17.5, 23.9, 24.0}) {
    EXPECT_NEAR(two_link_closed_form(10, 14, mu).r_star, two_link_bruteforce(10, 14, mu), 1e-3) << mu;
  }
}

TEST(ResilienceOracle, SingleLinkToDestination) {
  ResilienceOracle oracle(fixtures::single_link(2.0, 1.0));
  for (double mu : {0.0, 0.5, 1.0, 1.99, 2.0, 3.0}) {
    EXPECT_NEAR(oracle.link_value(0, mu), std::max(2.0 - mu, 0.0), 1e-12);
  }
  EXPECT_NEAR(oracle.s_star(), 1.0, 1e-12);
}

TEST(ResilienceOracle, TwoLinkCurveAndSplitMatchClosedForm) {
  ResilienceOracle oracle(fixtures::two_parallel(10, 14, 4));
  const auto& curve = oracle.node_curve(0);
  for (int i = 0; i <= 400; ++i) {
    const double mu = 24.0 * i / 400;
    auto cf = two_link_closed_form(10, 14, mu);
    EXPECT_NEAR(curve(mu), cf.r_star, 1e-3) << mu;
    EXPECT_NEAR(oracle.value(0, 0b11, {}, mu), cf.r_star, 1e-9) << mu;
    if (mu < 24.0) {
      auto x = oracle.argmax(0, 0b11, {}, mu);
      EXPECT_NEAR(x[0], *cf.x1, 1e-3) << mu;
      EXPECT_NEAR(x[0] + x[1], mu, 1e-12);
    }
  }
}

TEST(ResilienceOracle, CurvesAreNonincreasingAndNonnegative) {
  ResilienceOracle oracle(fixtures::example2());
  for (NodeId v = 0; v < 7; ++v) {
    const auto& c = oracle.node_curve(v);
    EXPECT_LE(c.max_increase(), 1e-9) << v;
    EXPECT_GE(c.min_value(), 0.0) << v;
  }
}

TEST(ResilienceOracle, ExampleTwoMargin) {
  ResilienceOracle oracle(fixtures::example2());
  EXPECT_NEAR(oracle.s_star(), 0.3, 0.01);
  EXPECT_TRUE(oracle.optimality_guaranteed());
}

TEST(ResilienceOracle, InfeasibleSetsGiveZero) {
  ResilienceOracle oracle(fixtures::two_parallel(1, 1, 1));
  EXPECT_EQ(oracle.value(0, 0b11, {}, 2.5), 0.0);
  EXPECT_EQ(oracle.value(0, 0, {}, 0.5), 0.0);
  std::vector<double> r{0.9, 0.9};
  EXPECT_EQ(oracle.value(0, 0b11, r, 1.0), 0.0);
  EXPECT_THROW(oracle.argmax(0, 0b11, r, 1.0), CascadeError);
}

TEST(ResilienceOracle, ArgmaxRespectsLowerBound) {
  ResilienceOracle oracle(fixtures::two_parallel(10, 14, 4));
  std::vector<double> r{3.0, 0.0};
  auto x = oracle.argmax(0, 0b11, r, 4.0);
  EXPECT_GE(x[0], 3.0 - 1e-12);
  EXPECT_NEAR(x[0] + x[1], 4.0, 1e-12);
}

TEST(BpaPolicy, ExampleTwoNodeOneSplit) {
  auto oracle = bpa_compute(fixtures::example2());
  BpaPolicy policy(oracle);
  // node 1 has out-links e3 (local 0) and e4 (local 1)
  EXPECT_NEAR(policy.split(1, 0b11, 1.9)[0], 0.4, 0.01);
}

TEST(BpaPolicy, ConservesFlowAndDominatesFullSplit) {
  auto oracle = bpa_compute(fixtures::example1());
  BpaPolicy policy(oracle);
  const auto& net = oracle->network();
  for (NodeId v = 0; v < net.destination(); ++v) {
    const std::size_t d = net.out_links(v).size();
    for (double mu : mu_grid(max_node_inflow(net, v), 21)) {
      auto full = policy.split(v, full_mask(d), mu);
      for (LocalMask J = 1; J <= full_mask(d); ++J) {
        auto x = policy.split(v, J, mu);
        double sum = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          sum += x[i];
          if (!contains(J, i)) {
            EXPECT_EQ(x[i], 0.0);
          }
        }
        EXPECT_NEAR(sum, mu, conservation_tolerance(mu));
        if (oracle->feasible(v, J, full, mu)) {
          for (std::size_t i : members(J)) {
            EXPECT_GE(x[i], full[i] - 1e-12);
          }
        }
      }
    }
  }
}

TEST(BpaPolicy, CheckedSplitReportsDoomedNode) {
  BpaPolicy policy(bpa_compute(fixtures::two_parallel(1, 1, 1)));
  EXPECT_THROW(policy.checked_split(0, 0b01, 1.5), CascadeError);
  EXPECT_NO_THROW(policy.split(0, 0b01, 1.5));
}

TEST(SimpleBounds, TwoLinksUnderBpa) {
  auto net = fixtures::two_parallel(10, 14, 4);
  BpaPolicy policy(bpa_compute(net));
  auto b = simple_bounds(net, policy);
  EXPECT_NEAR(b.lower, 8.0, 1e-9);
  EXPECT_NEAR(b.upper, 20.0, 1e-9);
}

TEST(SimpleBounds, SingleLink) {
  auto net = fixtures::single_link(2, 1);
  auto b = simple_bounds(net, ProportionalPolicy(net));
  EXPECT_DOUBLE_EQ(b.lower, 1.0);
  EXPECT_DOUBLE_EQ(b.upper, 1.0);
}

TEST(EquilibriumSet, SamplesAreStrictlyFeasible) {
  auto net = fixtures::example1();
  EquilibriumSet set(net, {}, 4.0);
  ASSERT_FALSE(set.empty());
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) EXPECT_TRUE(set.contains(set.sample(rng)));
  EXPECT_TRUE(EquilibriumSet(net, {}, 6.75).empty());
}

}  // namespace
}  // namespace cascade
