#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <vector>

#include "cascade/centralized.hpp"
#include "cascade/dynamics.hpp"
#include "cascade/resilience.hpp"

namespace cascade {

enum class AttackKind { Centralized, BpaGuided, BruteForce };

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::Centralized: return "centralized";
    case AttackKind::BpaGuided: return "bpa-guided";
    case AttackKind::BruteForce: return "brute-force";
  }
  return "unknown";
}

/// One simultaneous group of kills applied at `time`.
struct AttackStep {
  std::size_t time = 0;
  std::vector<LinkIndex> links;
  std::vector<double> amounts;
};

struct AttackPlan {
  AttackKind construction = AttackKind::Centralized;
  DisturbanceSchedule schedule;
  double predicted_magnitude = 0.0;
  double bound = 0.0;  // the upper bound the construction is measured against
  std::vector<AttackStep> steps;
  CascadeTrace trace;  // the cascade observed while building the plan
  bool transferring = true;
};

namespace detail {

inline bool settled_transferring(const FlowNetwork& net, const NetworkState& s, double tol) {
  return std::abs(destination_inflow(net, s) - net.inflow()) <= tol;
}

/// Active links reachable from the origin through active links and nodes.
inline std::vector<LinkIndex> reachable_links(const FlowNetwork& net, const NetworkState& s) {
  std::vector<char> seen(net.node_count(), 0);
  std::vector<NodeId> stack;
  std::vector<LinkIndex> links;
  if (!s.node_active[net.origin()]) return links;
  stack.push_back(net.origin());
  seen[net.origin()] = 1;
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    for (LinkIndex e : net.out_links(v)) {
      if (!s.link_active[e]) continue;
      links.push_back(e);
      NodeId w = net.link(e).head;
      if (w != net.destination() && s.node_active[w] && !seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
    }
  }
  std::sort(links.begin(), links.end());
  return links;
}

/// Drives a simulation in phases: settle, hit a group of links with exactly
/// their residual gap, settle again.
class AttackRunner {
 public:
  AttackRunner(const FlowNetwork& net, const RoutingPolicy& policy, const DynamicsOptions& opt)
      : net_(net), sim_(net, policy, opt) {
    sim_.settle(sim_.default_cap(0));
  }

  const NetworkState& state() const { return sim_.state(); }
  bool transferring() const { return settled_transferring(net_, state(), sim_.transfer_tolerance()); }

  void hit(const std::vector<LinkIndex>& links) {
    const auto& s = state();
    std::vector<double> delta(net_.link_count(), 0.0);
    AttackStep st;
    st.time = s.time + 1;
    for (LinkIndex e : links) {
      const double gap = std::max(s.residual[e] - s.flow[e], 0.0);
      delta[e] = gap;
      schedule_.add(st.time, e, gap);
      st.links.push_back(e);
      st.amounts.push_back(gap);
    }
    steps_.push_back(std::move(st));
    sim_.advance(delta);
    sim_.settle(sim_.default_cap(state().time));
  }

  AttackPlan finish(AttackKind kind, double bound) {
    AttackPlan plan;
    plan.construction = kind;
    plan.schedule = schedule_;
    plan.predicted_magnitude = schedule_.magnitude();
    plan.bound = bound;
    plan.steps = steps_;
    plan.trace = sim_.finish();
    plan.transferring = plan.trace.transferring;
    return plan;
  }

 private:
  const FlowNetwork& net_;
  Simulation sim_;
  DisturbanceSchedule schedule_;
  std::vector<AttackStep> steps_;
};

inline std::uint32_t link_mask(const std::vector<char>& active) {
  std::uint32_t m = 0;
  for (std::size_t e = 0; e < active.size(); ++e) {
    if (active[e]) m |= 1u << e;
  }
  return m;
}

}  // namespace detail

/// Greedy construction from the centralized recursion: at each settled state
/// kill the link minimising C_e - f_e + S(E(t) \ {e}, λ).
inline AttackPlan centralized_attack(const FlowNetwork& net, const RoutingPolicy& policy,
                                     const CentralizedTable& table, const DynamicsOptions& opt = {}) {
  detail::AttackRunner runner(net, policy, opt);
  for (std::size_t phase = 0; phase <= net.link_count() && runner.transferring(); ++phase) {
    const auto& s = runner.state();
    const std::uint32_t mask = detail::link_mask(s.link_active);
    std::optional<LinkIndex> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (LinkIndex e : detail::reachable_links(net, s)) {
      const double cost = std::max(s.residual[e] - s.flow[e], 0.0) + table.at(mask & ~(1u << e));
      if (cost < best_cost - 1e-12) {
        best_cost = cost;
        best = e;
      }
    }
    if (!best) break;
    runner.hit({*best});
  }
  return runner.finish(AttackKind::Centralized, table.full());
}

inline AttackPlan centralized_attack(const FlowNetwork& net, const RoutingPolicy& policy,
                                     const DynamicsOptions& opt = {}) {
  return centralized_attack(net, policy, centralized_recursion(net), opt);
}

/// Construction guided by the backward recursion on the residual network:
/// starting from the origin, pick the local link minimising
/// S_j(f_j) + S(J \ {j}, f, μ); kill it directly when that is no dearer than
/// attacking below it, otherwise descend into its head and repeat there.
inline AttackPlan bpa_guided_attack(const FlowNetwork& net, const RoutingPolicy& policy, const BpaOptions& bpa = {},
                                    const DynamicsOptions& opt = {}) {
  detail::AttackRunner runner(net, policy, opt);
  const double bound = ResilienceOracle(net, bpa).s_star();
  for (std::size_t phase = 0; phase <= net.link_count() && runner.transferring(); ++phase) {
    const auto& s = runner.state();
    std::vector<char> active = s.link_active;
    for (LinkIndex e = 0; e < net.link_count(); ++e) {
      const NodeId head = net.link(e).head;
      if (!s.node_active[net.link(e).tail] || (head != net.destination() && !s.node_active[head])) active[e] = 0;
    }
    ResilienceOracle oracle(net, bpa, active, s.residual);
    const auto inflow = node_inflows(net, s);
    NodeId v = net.origin();
    std::optional<LinkIndex> target;
    for (std::size_t depth = 0; depth < net.node_count() && !target; ++depth) {
      const LocalMask J = oracle.active_mask(v);
      if (J == 0) break;
      auto out = net.out_links(v);
      std::vector<double> r(out.size(), 0.0);
      for (std::size_t i = 0; i < out.size(); ++i) r[i] = active[out[i]] ? s.flow[out[i]] : 0.0;
      const double mu = inflow[v];
      std::size_t best = 0;
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t j : members(J)) {
        const double cost = oracle.local_link_value(v, j, r[j]) + oracle.value(v, without(J, j), r, mu);
        if (cost < best_cost - 1e-12) {
          best_cost = cost;
          best = j;
        }
      }
      const LinkIndex e = out[best];
      const NodeId w = net.link(e).head;
      const double direct = std::max(s.residual[e] - s.flow[e], 0.0);
      if (w == net.destination() || direct <= oracle.node_curve(w)(s.flow[e]) + 1e-12) {
        target = e;
      } else {
        v = w;
      }
    }
    if (!target) {
      auto links = detail::reachable_links(net, s);
      if (links.empty()) break;
      target = links.front();
    }
    runner.hit({*target});
  }
  return runner.finish(AttackKind::BpaGuided, bound);
}

// ---------------------------------------------------------------------------
// Brute-force margin

inline constexpr std::size_t kDefaultBruteForceLinks = 12;

struct BruteForceResult {
  double margin = 0.0;
  AttackPlan plan;
  std::size_t states_expanded = 0;
};

/// Exact minimum over kill schedules: shortest path over settled states,
/// where a move kills a non-empty group of reachable active links at the
/// cost of their residual gaps. Branch and bound against the incumbent.
inline BruteForceResult brute_force_margin(const FlowNetwork& net, const RoutingPolicy& policy,
                                           std::size_t max_links = kDefaultBruteForceLinks,
                                           const DynamicsOptions& opt = {}) {
  if (net.link_count() > max_links) {
    throw CascadeError(ErrorCode::TooManyLinks, std::to_string(net.link_count()) +
                                                    " links exceed the brute-force limit of " +
                                                    std::to_string(max_links));
  }
  const double eps = 1e-12;
  Simulation start(net, policy, opt);
  start.settle(start.default_cap(0));
  const double ttol = start.transfer_tolerance();

  struct Node {
    NetworkState state;
    double cost = 0.0;
    std::optional<std::uint64_t> parent;
    std::vector<LinkIndex> kill;
  };
  auto key_of = [&](const NetworkState& s) {
    std::uint64_t k = detail::link_mask(s.link_active);
    for (NodeId v = 0; v < net.node_count(); ++v) {
      if (s.node_active[v]) k |= std::uint64_t(1) << (32 + v);
    }
    return k;
  };
  auto settle_from = [&](const NetworkState& s, const std::vector<double>& delta) {
    auto next = step(net, s, policy, delta, opt).state;
    const std::size_t cap = next.time + 10 * net.link_count() + net.depth() + 2;
    for (;;) {
      auto after = step(net, next, policy, std::vector<double>(net.link_count(), 0.0), opt).state;
      if (after.same_as(next, opt.tol)) return next;
      if (after.time > cap) throw CascadeError(ErrorCode::NonTermination, "no steady state during brute force");
      next = std::move(after);
    }
  };

  std::map<std::uint64_t, Node> nodes;
  using Entry = std::pair<double, std::uint64_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  const auto root = key_of(start.state());
  nodes[root] = {start.state(), 0.0, std::nullopt, {}};
  queue.push({0.0, root});
  double incumbent = std::numeric_limits<double>::infinity();
  std::optional<std::uint64_t> best_goal;
  BruteForceResult result;

  while (!queue.empty()) {
    auto [cost, key] = queue.top();
    queue.pop();
    if (cost > nodes[key].cost + eps) continue;
    if (cost >= incumbent - eps) break;
    const NetworkState s = nodes[key].state;
    if (!detail::settled_transferring(net, s, ttol)) {
      incumbent = cost;
      best_goal = key;
      break;
    }
    ++result.states_expanded;
    const auto links = detail::reachable_links(net, s);
    std::vector<double> gap(links.size());
    for (std::size_t i = 0; i < links.size(); ++i) gap[i] = std::max(s.residual[links[i]] - s.flow[links[i]], 0.0);
    // enumerate groups, pruned by the accumulated gap
    std::vector<LinkIndex> group;
    std::vector<double> delta(net.link_count(), 0.0);
    std::function<void(std::size_t, double)> dfs = [&](std::size_t i, double spent) {
      if (cost + spent >= incumbent - eps) return;
      if (i == links.size()) {
        if (group.empty()) return;
        auto next = settle_from(s, delta);
        const auto k = key_of(next);
        const double c = cost + spent;
        auto it = nodes.find(k);
        if (it == nodes.end() || c < it->second.cost - eps) {
          nodes[k] = {std::move(next), c, key, group};
          queue.push({c, k});
          if (!detail::settled_transferring(net, nodes[k].state, ttol) && c < incumbent) {
            incumbent = c;
            best_goal = k;
          }
        }
        return;
      }
      group.push_back(links[i]);
      delta[links[i]] = gap[i];
      dfs(i + 1, spent + gap[i]);
      group.pop_back();
      delta[links[i]] = 0.0;
      dfs(i + 1, spent);
    };
    dfs(0, 0.0);
  }

  if (!best_goal) {
    throw CascadeError(ErrorCode::NonTermination, "no kill schedule stops the transfer");
  }
  // Rebuild the plan by replaying the chosen groups in order.
  std::vector<std::vector<LinkIndex>> groups;
  for (auto k = best_goal; nodes[*k].parent; k = nodes[*k].parent) groups.push_back(nodes[*k].kill);
  std::reverse(groups.begin(), groups.end());
  detail::AttackRunner runner(net, policy, opt);
  for (const auto& g : groups) runner.hit(g);
  result.plan = runner.finish(AttackKind::BruteForce, incumbent);
  result.margin = result.plan.predicted_magnitude;
  return result;
}

}  // namespace cascade
