#include <gtest/gtest.h>

#include "cascade/dynamics.hpp"
#include "cascade/random.hpp"
#include "cascade/resilience.hpp"
#include "fixtures.hpp"

namespace cascade {
namespace {

std::vector<std::string> ids(const FlowNetwork& net, const std::vector<LinkIndex>& links) {
  std::vector<std::string> out;
  for (LinkIndex e : links) out.push_back(net.link(e).id);
  return out;
}

TEST(InitialState, Example1ProportionalFlows) {
  auto net = fixtures::example1();
  auto policy = proportional_policy(net);
  auto s = initial_state(net, *policy);
  const std::vector<double> expected = {2, 2, 1, 1, 1, 0.5, 0.5, 0.5, 0.5, 2};
  for (LinkIndex e = 0; e < net.link_count(); ++e) EXPECT_NEAR(s.flow[e], expected[e], 1e-9) << net.link(e).id;
  EXPECT_NEAR(conservation_defect(net, s), 0.0, 1e-12);
}

TEST(InitialState, SingleLinkAndTwoLinkBpa) {
  auto one = fixtures::single_link(2, 1);
  EXPECT_DOUBLE_EQ(initial_state(one, *proportional_policy(one)).flow[0], 1.0);
  auto two = fixtures::two_parallel(10, 14, 4);
  auto s = initial_state(two, *bpa_policy(bpa_compute(two)));
  EXPECT_NEAR(s.flow[0], 2.0, 1e-6);
  EXPECT_NEAR(s.flow[1], 2.0, 1e-6);
}

TEST(InitialState, RejectsOverloadedStart) {
  auto net = fixtures::single_link(2, 2);
  EXPECT_THROW(initial_state(net, *proportional_policy(net)), CascadeError);
}

class BrokenPolicy final : public RoutingPolicy {
 public:
  PolicyKind kind() const override { return PolicyKind::Table; }
  std::vector<double> split(NodeId, LocalMask, double mu) const override { return {0.5 * mu}; }
};

TEST(InitialState, RejectsNonConservingPolicy) {
  auto net = fixtures::single_link(2, 1);
  try {
    initial_state(net, BrokenPolicy{});
    FAIL() << "expected PolicyConservationViolation";
  } catch (const CascadeError& e) {
    EXPECT_EQ(e.code(), ErrorCode::PolicyConservationViolation);
  }
}

TEST(Step, QuietStateOnlyAdvancesTime) {
  auto net = fixtures::example1();
  auto policy = proportional_policy(net);
  auto s = initial_state(net, *policy);
  auto next = step(net, s, *policy, std::vector<double>(net.link_count(), 0.0));
  EXPECT_EQ(next.state.time, 1u);
  EXPECT_TRUE(next.state.same_as(s, 1e-12));
  EXPECT_TRUE(next.inactivated_links.empty());
}

TEST(Step, Example1FirstInactivations) {
  auto net = fixtures::example1();
  auto policy = proportional_policy(net);
  DisturbanceSchedule schedule;
  schedule.add(1, net.link_index("e5"), 0.55);
  auto trace = run(net, *policy, schedule);
  const auto e5 = net.link_index("e5"), e3 = net.link_index("e3"), e4 = net.link_index("e4");
  EXPECT_NEAR(trace.steps[1].state.residual[e5], 0.95, 1e-12);
  EXPECT_EQ(trace.link_inactivation_time(e5), 2u);
  EXPECT_EQ(trace.node_inactivation_time(3), 3u);
  EXPECT_EQ(trace.link_inactivation_time(e3), 4u);
  EXPECT_NEAR(trace.steps[5].state.flow[e4], 2.0, 1e-12);
  EXPECT_EQ(trace.steps[2].inactivated_links.front().cause, InactivationCause::Overload);
  EXPECT_EQ(trace.steps[4].inactivated_links.front().cause, InactivationCause::DeadHeadNode);
  EXPECT_EQ(trace.steps[3].inactivated_nodes.front().cause, InactivationCause::NoActiveOutgoingLink);
}

TEST(Run, Example1CascadeWithThresholdRule) {
  auto net = fixtures::example1();
  DisturbanceSchedule schedule;
  schedule.add(1, net.link_index("e5"), 0.55);
  auto trace = run(net, *proportional_policy(net), schedule);
  EXPECT_FALSE(trace.transferring);
  EXPECT_DOUBLE_EQ(trace.final_outflow, 0.0);
  // e2 reaches its residual capacity exactly when node 0 routes all 4 units
  // onto it, so the >= rule drops it one step before e10.
  EXPECT_EQ(ids(net, trace.link_inactivation_order()),
            (std::vector<std::string>{"e5", "e3", "e8", "e6", "e9", "e7", "e4", "e1", "e2", "e10"}));
  EXPECT_TRUE(origin_active_equivalence(trace));
  EXPECT_FALSE(has_active_path(net, trace.final_state()));
}

TEST(Run, StrictOverloadTiesKeepLinksAlive) {
  auto net = fixtures::single_link(2, 1);
  DisturbanceSchedule schedule;
  schedule.add(1, 0, 1.0);  // residual exactly equals the flow
  auto policy = proportional_policy(net);
  EXPECT_FALSE(run(net, *policy, schedule).transferring);
  DynamicsOptions strict;
  strict.strict_overload = true;
  EXPECT_TRUE(run(net, *policy, schedule, strict).transferring);
}

TEST(Run, EmptyScheduleTransfers) {
  auto net = fixtures::example1();
  auto trace = run(net, *proportional_policy(net), {});
  EXPECT_TRUE(trace.transferring);
  EXPECT_EQ(trace.termination_time, 0u);
  EXPECT_DOUBLE_EQ(trace.final_outflow, 4.0);
  EXPECT_TRUE(is_transferring(trace, net));
}

TEST(Run, CumulativeCapEnforced) {
  auto net = fixtures::single_link(2, 1);
  DisturbanceSchedule schedule;
  schedule.add(1, 0, 1.5);
  schedule.add(2, 0, 1.0);
  try {
    run(net, *proportional_policy(net), schedule);
    FAIL() << "expected CumulativeCapExceeded";
  } catch (const CascadeError& e) {
    EXPECT_EQ(e.code(), ErrorCode::CumulativeCapExceeded);
  }
  EXPECT_THROW(schedule.add(0, 0, 1.0), CascadeError);
  EXPECT_THROW(schedule.add(1, 0, -1.0), CascadeError);
}

TEST(Run, StepCapSignalsNonTermination) {
  auto net = fixtures::example1();
  DisturbanceSchedule schedule;
  schedule.add(1, net.link_index("e5"), 0.55);
  DynamicsOptions opt;
  opt.step_cap = 3;
  try {
    run(net, *proportional_policy(net), schedule, opt);
    FAIL() << "expected NonTermination";
  } catch (const CascadeError& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonTermination);
  }
}

TEST(Run, Example2StatedAttackUnderExactBpa) {
  // The exact backward recursion routes 1.898095 (not 1.9) onto e1, so
  // e5 keeps a gap of 0.200476 > 0.2 and survives the stated attack.
  auto net = fixtures::example2();
  auto policy = bpa_policy(bpa_compute(net));
  auto s = initial_state(net, *policy);
  // origin split y solves 1.725 - 0.75 y = (y - 1.83) + 0.7 / 3
  EXPECT_NEAR(s.flow[net.link_index("e1")], (1.725 + 1.83 - 0.7 / 3) / 1.75, 1e-6);
  DisturbanceSchedule schedule;
  schedule.add(1, net.link_index("e5"), 0.2);
  schedule.add(1, net.link_index("e10"), 0.07);
  EXPECT_NEAR(schedule.magnitude(), 0.27, 1e-12);
  auto trace = run(net, *policy, schedule);
  EXPECT_TRUE(trace.transferring);
  EXPECT_TRUE(origin_active_equivalence(trace));
}

// Trace invariants on random DAGs and random schedules.
TEST(Run, RandomTraceInvariants) {
  random::Rng rng(21);
  for (int i = 0; i < 120; ++i) {
    auto net = random::random_dag(rng);
    auto policy = proportional_policy(net);
    try {
      initial_state(net, *policy);
    } catch (const CascadeError&) {
      continue;  // proportional splits overload some link at t = 0
    }
    DisturbanceSchedule schedule;
    std::vector<double> left = net.capacities();
    const std::size_t hits = random::pick(rng, 0, 4);
    for (std::size_t h = 0; h < hits; ++h) {
      const LinkIndex e = random::pick(rng, 0, net.link_count() - 1);
      const double amount = random::uniform(rng, 0.0, left[e]);
      left[e] -= amount;
      schedule.add(random::pick(rng, 1, 4), e, amount);
    }
    auto trace = run(net, *policy, schedule);
    EXPECT_TRUE(origin_active_equivalence(trace)) << "net " << i;
    EXPECT_EQ(has_active_path(net, trace.final_state()), trace.transferring) << "net " << i;
    for (std::size_t t = 1; t < trace.steps.size(); ++t) {
      const auto& a = trace.steps[t - 1].state;
      const auto& b = trace.steps[t].state;
      for (LinkIndex e = 0; e < net.link_count(); ++e) {
        EXPECT_LE(b.link_active[e], a.link_active[e]);
        EXPECT_GE(b.residual[e], 0.0);
        EXPECT_LE(b.residual[e], net.capacity(e));
        if (!a.link_active[e]) {
          EXPECT_EQ(b.flow[e], 0.0);
        }
      }
      for (NodeId v = 0; v < net.node_count(); ++v) EXPECT_LE(b.node_active[v], a.node_active[v]);
      // conservation holds once changes have had time to reach every node
      bool quiet = t > net.depth();
      for (std::size_t k = 0; quiet && k <= net.depth(); ++k) {
        const auto& st = trace.steps[t - k];
        quiet = st.inactivated_links.empty() && st.inactivated_nodes.empty() &&
                (t - k == 0 || st.state.residual == trace.steps[t - k - 1].state.residual);
      }
      if (quiet) {
        EXPECT_LE(conservation_defect(net, b), 1e-9) << "net " << i << " t " << t;
      }
    }
  }
}

}  // namespace
}  // namespace cascade
