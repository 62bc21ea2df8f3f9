#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "cascade/network.hpp"

namespace cascade {

/// True iff dropping the destination and its incoming links leaves a directed
/// tree rooted at the origin.
inline bool is_tree(const FlowNetwork& net) {
  const NodeId n = net.destination();
  std::size_t inner_links = 0;
  for (NodeId v = 0; v < n; ++v) {
    std::size_t in = net.in_links(v).size();
    if (v == 0 ? in != 0 : in != 1) return false;
  }
  for (const auto& l : net.links()) {
    if (l.head != n) ++inner_links;
  }
  if (inner_links + 1 != n) return false;
  std::vector<char> seen(net.node_count(), 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (LinkIndex e : net.out_links(v)) {
      auto w = net.link(e).head;
      if (w != n && !seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

/// Network with one destination copy per incoming link of the original
/// destination. Nodes 0..n-1 keep their labels; copies are n, n+1, ...
struct DExpandedNetwork {
  std::size_t node_count = 0;
  std::vector<Link> links;
  double inflow = 0.0;
  std::vector<NodeId> destinations;
  NodeId original_destination = 0;

  bool is_destination(NodeId v) const { return v >= original_destination; }
};

inline DExpandedNetwork d_expand(const FlowNetwork& net) {
  DExpandedNetwork out;
  out.original_destination = net.destination();
  out.inflow = net.inflow();
  out.links = net.links();
  NodeId next = net.destination();
  for (LinkIndex e : net.in_links(net.destination())) {
    out.links[e].head = next;
    out.destinations.push_back(next);
    ++next;
  }
  if (out.destinations.empty()) out.destinations.push_back(next++);
  out.node_count = next;
  return out;
}

/// Inverse of d_expand.
inline FlowNetwork collapse(const DExpandedNetwork& dx) {
  auto links = dx.links;
  for (auto& l : links) {
    if (dx.is_destination(l.head)) l.head = dx.original_destination;
  }
  return FlowNetwork(dx.original_destination + 1, std::move(links), dx.inflow);
}

inline ValidationReport validate(const DExpandedNetwork& dx) {
  return detail::validate_graph(dx.node_count, dx.links, [&dx](NodeId v) { return dx.is_destination(v); });
}

namespace detail {

// Canonical form of the d-expanded subtree below v: sorted (capacity, child) pairs.
inline std::string canonical_subtree(const DExpandedNetwork& dx, const std::vector<std::vector<LinkIndex>>& out,
                                     NodeId v) {
  if (dx.is_destination(v)) return "d";
  std::vector<std::string> parts;
  for (LinkIndex e : out[v]) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g:", dx.links[e].capacity);
    parts.push_back(buf + canonical_subtree(dx, out, dx.links[e].head));
  }
  std::sort(parts.begin(), parts.end());
  std::string s = "(";
  for (const auto& p : parts) s += p + ",";
  return s + ")";
}

inline bool symmetric_below(const DExpandedNetwork& dx, const std::vector<std::vector<LinkIndex>>& out, NodeId v) {
  if (dx.is_destination(v)) return true;
  const auto& kids = out[v];
  bool depth_one = std::all_of(kids.begin(), kids.end(), [&](LinkIndex e) { return dx.is_destination(dx.links[e].head); });
  if (depth_one) {
    return std::all_of(kids.begin(), kids.end(),
                       [&](LinkIndex e) { return dx.links[e].capacity == dx.links[kids.front()].capacity; });
  }
  std::string first;
  for (LinkIndex e : kids) {
    if (!symmetric_below(dx, out, dx.links[e].head)) return false;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g:", dx.links[e].capacity);
    std::string c = buf + canonical_subtree(dx, out, dx.links[e].head);
    if (first.empty()) first = c;
    else if (c != first) return false;
  }
  return true;
}

}  // namespace detail

/// Depth one: all root links share one capacity. Deeper: every child subtree
/// (with the link reaching it) is symmetric and all of them are identical.
inline bool is_symmetric_tree(const FlowNetwork& net) {
  if (!is_tree(net)) throw CascadeError(ErrorCode::NotATree, "symmetry is defined for trees only");
  auto dx = d_expand(net);
  std::vector<std::vector<LinkIndex>> out(dx.node_count);
  for (LinkIndex e = 0; e < dx.links.size(); ++e) out[dx.links[e].tail].push_back(e);
  return detail::symmetric_below(dx, out, 0);
}

}  // namespace cascade
