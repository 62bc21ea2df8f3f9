#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cascade/network.hpp"
#include "cascade/routing.hpp"
#include "cascade/subset.hpp"

namespace cascade {

struct DynamicsOptions {
  /// Overload test is f_e(t) >= C_e(t) - tol; also the flow-equality tolerance.
  double tol = 1e-9;
  /// Use f_e(t) > C_e(t) + tol instead; off by default. Capacity reductions
  /// to exactly the current flow then no longer inactivate a link.
  bool strict_overload = false;
  /// Hard cap on simulated steps; default 10·|E| + depth + horizon.
  std::optional<std::size_t> step_cap;
};

struct NetworkState {
  std::size_t time = 0;
  std::vector<char> node_active;  // destination entry is always 1
  std::vector<char> link_active;
  std::vector<double> flow;
  std::vector<double> residual;

  bool same_as(const NetworkState& other, double tol) const {
    if (node_active != other.node_active || link_active != other.link_active) return false;
    for (std::size_t e = 0; e < flow.size(); ++e) {
      if (std::abs(flow[e] - other.flow[e]) >= tol) return false;
      if (residual[e] != other.residual[e]) return false;
    }
    return true;
  }
};

/// Per-time, per-link capacity reductions δ_e(t), t >= 1.
class DisturbanceSchedule {
 public:
  void add(std::size_t t, LinkIndex e, double amount) {
    if (t == 0) throw CascadeError(ErrorCode::SchemaError, "disturbances start at t = 1");
    if (!(amount >= 0.0) || !std::isfinite(amount)) {
      throw CascadeError(ErrorCode::SchemaError, "disturbance amounts must be finite and nonnegative");
    }
    if (amount > 0.0) entries_[t][e] += amount;
  }

  /// δ(t) as a dense per-link vector.
  std::vector<double> at(std::size_t t, std::size_t link_count) const {
    std::vector<double> d(link_count, 0.0);
    auto it = entries_.find(t);
    if (it != entries_.end()) {
      for (const auto& [e, v] : it->second) d[e] = v;
    }
    return d;
  }

  std::size_t horizon() const { return entries_.empty() ? 0 : entries_.rbegin()->first; }
  bool empty() const { return entries_.empty(); }

  double magnitude() const {
    double m = 0.0;
    for (const auto& [t, row] : entries_) {
      for (const auto& [e, v] : row) m += v;
    }
    return m;
  }

  /// Δ_e(∞) per link.
  std::vector<double> cumulative(std::size_t link_count) const {
    std::vector<double> c(link_count, 0.0);
    for (const auto& [t, row] : entries_) {
      for (const auto& [e, v] : row) c[e] += v;
    }
    return c;
  }

  /// Throws CumulativeCapExceeded unless Δ(t) <= C for every t.
  void check_against(const FlowNetwork& net, double tol = 1e-9) const {
    auto total = cumulative(net.link_count());
    for (LinkIndex e = 0; e < net.link_count(); ++e) {
      if (total[e] > net.capacity(e) + tol) {
        throw CascadeError(ErrorCode::CumulativeCapExceeded,
                           "cumulative disturbance on '" + net.link(e).id + "' exceeds its capacity");
      }
    }
  }

  const std::map<std::size_t, std::map<LinkIndex, double>>& entries() const { return entries_; }

 private:
  std::map<std::size_t, std::map<LinkIndex, double>> entries_;
};

enum class InactivationCause { Overload, DeadHeadNode, NoActiveOutgoingLink };

inline const char* to_string(InactivationCause c) {
  switch (c) {
    case InactivationCause::Overload: return "overload";
    case InactivationCause::DeadHeadNode: return "dead-head-node";
    case InactivationCause::NoActiveOutgoingLink: return "no-active-outgoing-link";
  }
  return "unknown";
}

struct LinkEvent {
  LinkIndex link;
  InactivationCause cause;
};

struct NodeEvent {
  NodeId node;
  InactivationCause cause;
};

/// Snapshot at time t together with what became inactive between t-1 and t.
struct TraceStep {
  NetworkState state;
  std::vector<LinkEvent> inactivated_links;
  std::vector<NodeEvent> inactivated_nodes;
};

struct CascadeTrace {
  std::vector<TraceStep> steps;
  std::size_t termination_time = 0;
  bool transferring = false;
  double final_outflow = 0.0;
  double inflow = 0.0;

  const NetworkState& final_state() const { return steps.back().state; }

  /// Links in the order they became inactive (ties by link index).
  std::vector<LinkIndex> link_inactivation_order() const {
    std::vector<LinkIndex> order;
    for (const auto& s : steps) {
      std::vector<LinkIndex> at_t;
      for (const auto& ev : s.inactivated_links) at_t.push_back(ev.link);
      std::sort(at_t.begin(), at_t.end());
      order.insert(order.end(), at_t.begin(), at_t.end());
    }
    return order;
  }

  /// Time at which link e left E(t), if it did.
  std::optional<std::size_t> link_inactivation_time(LinkIndex e) const {
    for (const auto& s : steps) {
      for (const auto& ev : s.inactivated_links) {
        if (ev.link == e) return s.state.time;
      }
    }
    return std::nullopt;
  }

  std::optional<std::size_t> node_inactivation_time(NodeId v) const {
    for (const auto& s : steps) {
      for (const auto& ev : s.inactivated_nodes) {
        if (ev.node == v) return s.state.time;
      }
    }
    return std::nullopt;
  }
};

/// λ_v(t) for every node: external inflow plus flow on active incoming links.
inline std::vector<double> node_inflows(const FlowNetwork& net, const NetworkState& s) {
  std::vector<double> in(net.node_count(), 0.0);
  in[net.origin()] = net.inflow();
  for (LinkIndex e = 0; e < net.link_count(); ++e) {
    if (s.link_active[e]) in[net.link(e).head] += s.flow[e];
  }
  return in;
}

inline double destination_inflow(const FlowNetwork& net, const NetworkState& s) {
  return node_inflows(net, s)[net.destination()];
}

namespace detail {

inline LocalMask active_out_mask(const FlowNetwork& net, const std::vector<char>& link_active, NodeId v) {
  LocalMask m = 0;
  auto out = net.out_links(v);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (link_active[out[i]]) m |= single(i);
  }
  return m;
}

inline std::vector<double> checked_split(const RoutingPolicy& policy, NodeId v, LocalMask active, double mu) {
  auto x = policy.split(v, active, mu);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!contains(active, i) && x[i] != 0.0) {
      throw CascadeError(ErrorCode::PolicyConservationViolation, "policy routes flow onto an inactive link");
    }
    total += x[i];
  }
  if (std::abs(total - mu) > conservation_tolerance(mu)) {
    throw CascadeError(ErrorCode::PolicyConservationViolation,
                       "split at node " + std::to_string(v) + " sums to " + std::to_string(total) + " instead of " +
                           std::to_string(mu));
  }
  return x;
}

}  // namespace detail

/// All nodes and links active, C(0) = C, f(0) obtained by routing λ through
/// the policy in topological order.
inline NetworkState initial_state(const FlowNetwork& net, const RoutingPolicy& policy,
                                  const DynamicsOptions& opt = {}) {
  require_valid(net);
  NetworkState s;
  s.node_active.assign(net.node_count(), 1);
  s.link_active.assign(net.link_count(), 1);
  s.flow.assign(net.link_count(), 0.0);
  s.residual = net.capacities();
  std::vector<double> in(net.node_count(), 0.0);
  in[net.origin()] = net.inflow();
  for (NodeId v : net.topological_order()) {
    if (v == net.destination()) continue;
    auto out = net.out_links(v);
    auto x = detail::checked_split(policy, v, full_mask(out.size()), in[v]);
    for (std::size_t i = 0; i < out.size(); ++i) {
      s.flow[out[i]] = x[i];
      in[net.link(out[i]).head] += x[i];
    }
  }
  for (LinkIndex e = 0; e < net.link_count(); ++e) {
    if (s.flow[e] >= net.capacity(e) - opt.tol) {
      throw CascadeError(ErrorCode::InfeasibleInitialFlow, "initial flow on '" + net.link(e).id + "' is " +
                                                               std::to_string(s.flow[e]) + " with capacity " +
                                                               std::to_string(net.capacity(e)));
    }
  }
  return s;
}

/// One synchronous update. Every rule reads the time-t state:
/// link inactivation, node inactivation, routing, then capacity reduction.
inline TraceStep step(const FlowNetwork& net, const NetworkState& s, const RoutingPolicy& policy,
                      const std::vector<double>& delta, const DynamicsOptions& opt = {}) {
  const NodeId n = net.destination();
  TraceStep out;
  NetworkState& next = out.state;
  next.time = s.time + 1;
  next.link_active = s.link_active;
  next.node_active = s.node_active;
  next.flow.assign(net.link_count(), 0.0);
  next.residual = s.residual;

  for (LinkIndex e = 0; e < net.link_count(); ++e) {
    if (!s.link_active[e]) continue;
    const NodeId head = net.link(e).head;
    const bool overloaded =
        opt.strict_overload ? s.flow[e] > s.residual[e] + opt.tol : s.flow[e] >= s.residual[e] - opt.tol;
    if (overloaded) {
      next.link_active[e] = 0;
      out.inactivated_links.push_back({e, InactivationCause::Overload});
    } else if (head != n && !s.node_active[head]) {
      next.link_active[e] = 0;
      out.inactivated_links.push_back({e, InactivationCause::DeadHeadNode});
    }
  }

  for (NodeId v = 0; v < n; ++v) {
    if (!s.node_active[v]) continue;
    if (detail::active_out_mask(net, s.link_active, v) == 0) {
      next.node_active[v] = 0;
      out.inactivated_nodes.push_back({v, InactivationCause::NoActiveOutgoingLink});
    }
  }

  auto in = node_inflows(net, s);
  for (NodeId v = 0; v < n; ++v) {
    if (!s.node_active[v]) continue;
    LocalMask active = detail::active_out_mask(net, s.link_active, v);
    if (active == 0) continue;
    auto x = detail::checked_split(policy, v, active, in[v]);
    auto links = net.out_links(v);
    for (std::size_t i = 0; i < links.size(); ++i) next.flow[links[i]] = x[i];
  }

  for (LinkIndex e = 0; e < net.link_count(); ++e) {
    if (!s.link_active[e] || delta[e] == 0.0) continue;
    if (delta[e] < 0.0) throw CascadeError(ErrorCode::SchemaError, "negative disturbance");
    next.residual[e] = s.residual[e] - delta[e];
    if (next.residual[e] < -opt.tol) {
      throw CascadeError(ErrorCode::CumulativeCapExceeded,
                         "cumulative disturbance on '" + net.link(e).id + "' exceeds its capacity");
    }
    next.residual[e] = std::max(next.residual[e], 0.0);
  }
  return out;
}

/// Optional process-wide hook called with every finished trace; used by
/// test harnesses to audit all traces a run produces.
using TraceObserver = std::function<void(const FlowNetwork&, const CascadeTrace&)>;

inline TraceObserver& trace_observer() {
  static TraceObserver observer;
  return observer;
}

/// Step-by-step driver that owns the evolving state and its trace. Used by
/// `run` and by the adversaries, which interleave settling with new hits.
class Simulation {
 public:
  Simulation(const FlowNetwork& net, const RoutingPolicy& policy, DynamicsOptions opt = {})
      : net_(net), policy_(policy), opt_(opt) {
    trace_.inflow = net.inflow();
    trace_.steps.push_back({initial_state(net, policy, opt), {}, {}});
  }

  const NetworkState& state() const { return trace_.steps.back().state; }
  const CascadeTrace& trace() const { return trace_; }
  const DynamicsOptions& options() const { return opt_; }

  /// Advance one step with disturbance `delta` applied at the new time.
  bool advance(const std::vector<double>& delta) {
    auto next = step(net_, state(), policy_, delta, opt_);
    bool changed = !next.state.same_as(state(), opt_.tol);
    trace_.steps.push_back(std::move(next));
    return changed;
  }

  /// Run with zero disturbance until one more step would change nothing.
  /// Returns the settled time. Throws NonTermination past `cap` steps.
  std::size_t settle(std::size_t cap) {
    const std::vector<double> zero(net_.link_count(), 0.0);
    for (;;) {
      auto next = step(net_, state(), policy_, zero, opt_);
      if (next.state.same_as(state(), opt_.tol)) return state().time;
      if (next.state.time > cap) {
        throw CascadeError(ErrorCode::NonTermination,
                           "no steady state within " + std::to_string(cap) + " steps");
      }
      trace_.steps.push_back(std::move(next));
    }
  }

  std::size_t default_cap(std::size_t horizon) const {
    return opt_.step_cap.value_or(10 * net_.link_count() + net_.depth() + 2 + horizon);
  }

  /// Fill termination time and verdict from the current (settled) state.
  const CascadeTrace& finish() {
    trace_.termination_time = state().time;
    trace_.final_outflow = destination_inflow(net_, state());
    trace_.transferring = std::abs(trace_.final_outflow - net_.inflow()) <= transfer_tolerance();
    if (trace_observer()) trace_observer()(net_, trace_);
    return trace_;
  }

  double transfer_tolerance() const { return opt_.tol * std::max(1.0, net_.inflow()) * 10; }

 private:
  const FlowNetwork& net_;
  const RoutingPolicy& policy_;
  DynamicsOptions opt_;
  CascadeTrace trace_;
};

/// Simulates until the schedule horizon has passed and the state is fixed.
inline CascadeTrace run(const FlowNetwork& net, const RoutingPolicy& policy, const DisturbanceSchedule& schedule,
                        const DynamicsOptions& opt = {}) {
  schedule.check_against(net, opt.tol);
  Simulation sim(net, policy, opt);
  const std::size_t horizon = schedule.horizon();
  const std::size_t cap = sim.default_cap(horizon);
  while (sim.state().time < horizon) sim.advance(schedule.at(sim.state().time + 1, net.link_count()));
  sim.settle(cap);
  return sim.finish();
}

inline bool is_transferring(const CascadeTrace& trace, const FlowNetwork& net, double tol = 1e-8) {
  return std::abs(trace.final_outflow - net.inflow()) <= tol * std::max(1.0, net.inflow());
}

/// Transferring iff the origin is still active at termination, and the final
/// outflow is either 0 or λ.
inline bool origin_active_equivalence(const CascadeTrace& trace, double tol = 1e-9) {
  const auto& s = trace.final_state();
  const bool origin_active = s.node_active[0] != 0;
  const double scale = std::max(1.0, trace.inflow);
  const bool binary = std::abs(trace.final_outflow) <= tol * scale ||
                      std::abs(trace.final_outflow - trace.inflow) <= tol * scale;
  return binary && (origin_active == trace.transferring);
}

/// True iff (V(T), E(T)) still has a directed 0 → n path.
inline bool has_active_path(const FlowNetwork& net, const NetworkState& s) {
  std::vector<char> seen(net.node_count(), 0);
  std::vector<NodeId> stack;
  if (s.node_active[0]) {
    stack.push_back(0);
    seen[0] = 1;
  }
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    for (LinkIndex e : net.out_links(v)) {
      NodeId w = net.link(e).head;
      if (s.link_active[e] && s.node_active[w] && !seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return seen[net.destination()] != 0;
}

/// Largest conservation defect over active non-destination nodes.
inline double conservation_defect(const FlowNetwork& net, const NetworkState& s) {
  auto in = node_inflows(net, s);
  double worst = 0.0;
  for (NodeId v = 0; v < net.destination(); ++v) {
    if (!s.node_active[v]) continue;
    double out = 0.0;
    for (LinkIndex e : net.out_links(v)) {
      if (s.link_active[e]) out += s.flow[e];
    }
    worst = std::max(worst, std::abs(out - in[v]));
  }
  return worst;
}

}  // namespace cascade
