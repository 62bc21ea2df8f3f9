#pragma once

#include <string>
#include <vector>

#include "cascade/network.hpp"

namespace cascade::fixtures {

inline FlowNetwork make(std::size_t nodes, std::vector<Link> links, double lambda) {
  return FlowNetwork(nodes, std::move(links), lambda);
}

/// Ten-link depth-4 network shared by both worked examples. Node 7 is the
/// destination.
inline FlowNetwork depth4(const std::vector<double>& caps, double lambda) {
  const std::vector<std::pair<NodeId, NodeId>> ends = {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {3, 7},
                                                       {4, 5}, {4, 6}, {5, 7}, {6, 7}, {2, 7}};
  std::vector<Link> links;
  for (std::size_t i = 0; i < ends.size(); ++i) {
    links.push_back({"e" + std::to_string(i + 1), ends[i].first, ends[i].second, caps[i]});
  }
  return FlowNetwork(8, std::move(links), lambda);
}

/// Cascade example: λ = 4 under proportional routing.
inline FlowNetwork example1() { return depth4({4, 4, 3, 3, 1.5, 3, 3, 0.75, 1.5, 3}, 4.0); }

/// Flow-monotonicity example: λ = 2 under BPA routing.
inline FlowNetwork example2() { return depth4({2.5, 3, 3, 2, 0.6, 0.6, 2, 0.75, 1.5, 0.17}, 2.0); }

inline FlowNetwork single_link(double c, double lambda) { return FlowNetwork(2, {{"e1", 0, 1, c}}, lambda); }

inline FlowNetwork two_parallel(double c1, double c2, double lambda) {
  return FlowNetwork(2, {{"e1", 0, 1, c1}, {"e2", 0, 1, c2}}, lambda);
}

}  // namespace cascade::fixtures
