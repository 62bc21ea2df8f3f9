#pragma once

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/edmonds_karp_max_flow.hpp>

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "cascade/network.hpp"

namespace cascade {

struct MaxFlowResult {
  double value = 0.0;
  std::vector<char> source_side;  // per node, reachable from 0 in the final residual graph
};

/// Max 0→n flow over the links with `active[e]` set (all links when empty),
/// using `capacities` in place of the network's own.
inline MaxFlowResult max_flow(const FlowNetwork& net, std::span<const double> capacities,
                              std::span<const char> active = {}) {
  using Traits = boost::adjacency_list_traits<boost::vecS, boost::vecS, boost::directedS>;
  using Graph = boost::adjacency_list<
      boost::vecS, boost::vecS, boost::directedS, boost::no_property,
      boost::property<boost::edge_capacity_t, double,
                      boost::property<boost::edge_residual_capacity_t, double,
                                      boost::property<boost::edge_reverse_t, Traits::edge_descriptor>>>>;

  Graph g(net.node_count());
  auto cap = boost::get(boost::edge_capacity, g);
  auto rev = boost::get(boost::edge_reverse, g);
  auto res = boost::get(boost::edge_residual_capacity, g);
  for (LinkIndex e = 0; e < net.link_count(); ++e) {
    if (!active.empty() && !active[e]) continue;
    const auto& l = net.link(e);
    auto fwd = boost::add_edge(l.tail, l.head, g).first;
    auto bwd = boost::add_edge(l.head, l.tail, g).first;
    cap[fwd] = capacities[e];
    cap[bwd] = 0.0;
    rev[fwd] = bwd;
    rev[bwd] = fwd;
  }

  MaxFlowResult out;
  out.value = boost::edmonds_karp_max_flow(g, net.origin(), net.destination());

  out.source_side.assign(net.node_count(), 0);
  std::vector<NodeId> stack{net.origin()};
  out.source_side[net.origin()] = 1;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto [it, end] = boost::out_edges(v, g); it != end; ++it) {
      auto w = boost::target(*it, g);
      if (!out.source_side[w] && res[*it] > 1e-12) {
        out.source_side[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return out;
}

inline MaxFlowResult max_flow(const FlowNetwork& net) {
  auto caps = net.capacities();
  return max_flow(net, caps);
}

/// Origin-side node set U (0 ∈ U, n ∉ U) with C_U and λ_U.
struct Cut {
  std::vector<NodeId> members;
  double capacity = 0.0;
  double inflow = 0.0;
};

inline double cut_capacity(const FlowNetwork& net, const std::vector<char>& in_cut) {
  double c = 0.0;
  for (const auto& l : net.links()) {
    if (in_cut[l.tail] && !in_cut[l.head]) c += l.capacity;
  }
  return c;
}

inline Cut make_cut(const FlowNetwork& net, const std::vector<char>& in_cut) {
  Cut cut;
  for (NodeId v = 0; v < net.node_count(); ++v) {
    if (in_cut[v]) cut.members.push_back(v);
  }
  cut.capacity = cut_capacity(net, in_cut);
  cut.inflow = net.inflow();
  return cut;
}

/// Exhaustive minimum over connected cuts containing the origin. Small-instance
/// oracle: cost is 2^(n-1).
inline Cut min_cut_by_enumeration(const FlowNetwork& net) {
  const std::size_t inner = net.node_count() - 2;
  if (inner > 24) throw CascadeError(ErrorCode::TooManyLinks, "cut enumeration limited to 24 intermediate nodes");
  Cut best;
  best.capacity = std::numeric_limits<double>::infinity();
  std::vector<char> in_cut(net.node_count(), 0);
  std::vector<char> seen(net.node_count(), 0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << inner); ++mask) {
    std::fill(in_cut.begin(), in_cut.end(), 0);
    in_cut[0] = 1;
    for (std::size_t i = 0; i < inner; ++i) {
      if (mask >> i & 1U) in_cut[i + 1] = 1;
    }
    // connected: every member reachable from 0 without leaving the cut
    std::fill(seen.begin(), seen.end(), 0);
    std::vector<NodeId> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      for (LinkIndex e : net.out_links(v)) {
        auto w = net.link(e).head;
        if (in_cut[w] && !seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    if (seen != in_cut) continue;
    double c = cut_capacity(net, in_cut);
    if (c < best.capacity) best = make_cut(net, in_cut);
  }
  return best;
}

inline Cut min_cut_by_max_flow(const FlowNetwork& net) {
  auto mf = max_flow(net);
  return make_cut(net, mf.source_side);
}

/// Cut minimising C_U - λ together with that residual value. Enumerates on
/// small instances, max-flow otherwise.
inline std::pair<Cut, double> min_residual_cut(const FlowNetwork& net) {
  Cut cut = net.node_count() <= 18 ? min_cut_by_enumeration(net) : min_cut_by_max_flow(net);
  double residual = cut.capacity - net.inflow();
  return {std::move(cut), residual};
}

inline bool strictly_exceeds(double capacity, double demand) {
  return capacity - demand > 1e-12 * std::max(1.0, std::abs(demand));
}

/// λ_U < C_U on every cut, decided by max-flow.
inline bool feasibility_check(const FlowNetwork& net) {
  return strictly_exceeds(max_flow(net).value, net.inflow());
}

inline bool feasibility_by_enumeration(const FlowNetwork& net) {
  return strictly_exceeds(min_cut_by_enumeration(net).capacity, net.inflow());
}

}  // namespace cascade
