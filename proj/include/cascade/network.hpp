#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cascade/error.hpp"

namespace cascade {

using NodeId = std::size_t;
using LinkIndex = std::size_t;

struct Link {
  std::string id;
  NodeId tail = 0;
  NodeId head = 0;
  double capacity = 0.0;
};

/// Capacitated directed multigraph with a single origin (node 0), a single
/// destination (node n = node_count - 1) and a constant inflow at the origin.
///
/// Outgoing and incoming link lists are ordered by link id. That order is the
/// "local position" used by routing policies and the resilience oracle to
/// address subsets of a node's outgoing links as bitmasks.
class FlowNetwork {
 public:
  FlowNetwork() = default;

  FlowNetwork(std::size_t node_count, std::vector<Link> links, double inflow)
      : node_count_(node_count), links_(std::move(links)), inflow_(inflow) {
    if (node_count_ < 2) {
      throw CascadeError(ErrorCode::MalformedLink, "a network needs at least two nodes");
    }
    for (const auto& l : links_) {
      if (l.tail >= node_count_ || l.head >= node_count_) {
        throw CascadeError(ErrorCode::MalformedLink, "link '" + l.id + "' references a missing node");
      }
    }
    index();
  }

  std::size_t node_count() const { return node_count_; }
  NodeId origin() const { return 0; }
  NodeId destination() const { return node_count_ - 1; }
  double inflow() const { return inflow_; }

  std::size_t link_count() const { return links_.size(); }
  const std::vector<Link>& links() const { return links_; }
  const Link& link(LinkIndex e) const { return links_[e]; }
  double capacity(LinkIndex e) const { return links_[e].capacity; }

  std::span<const LinkIndex> out_links(NodeId v) const { return out_[v]; }
  std::span<const LinkIndex> in_links(NodeId v) const { return in_[v]; }

  /// Position of `e` inside out_links(tail(e)).
  std::size_t local_position(LinkIndex e) const { return local_pos_[e]; }

  std::optional<LinkIndex> find_link(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  LinkIndex link_index(std::string_view id) const {
    auto e = find_link(id);
    if (!e) throw CascadeError(ErrorCode::MalformedLink, "unknown link id '" + std::string(id) + "'");
    return *e;
  }

  /// Kahn order with smallest-label tie-break; empty when the graph has a cycle.
  const std::vector<NodeId>& topological_order() const { return topo_; }
  bool is_acyclic() const { return topo_.size() == node_count_; }

  std::vector<double> capacities() const {
    std::vector<double> c(links_.size());
    for (std::size_t e = 0; e < links_.size(); ++e) c[e] = links_[e].capacity;
    return c;
  }

  FlowNetwork with_inflow(double inflow) const { return FlowNetwork(node_count_, links_, inflow); }

  FlowNetwork with_capacities(std::span<const double> caps) const {
    auto links = links_;
    for (std::size_t e = 0; e < links.size(); ++e) links[e].capacity = caps[e];
    return FlowNetwork(node_count_, std::move(links), inflow_);
  }

  /// Longest directed path length in links (0 for a cyclic graph).
  std::size_t depth() const {
    if (!is_acyclic()) return 0;
    std::vector<std::size_t> d(node_count_, 0);
    std::size_t best = 0;
    for (NodeId v : topo_) {
      for (LinkIndex e : out_[v]) {
        d[links_[e].head] = std::max(d[links_[e].head], d[v] + 1);
        best = std::max(best, d[links_[e].head]);
      }
    }
    return best;
  }

 private:
  void index() {
    out_.assign(node_count_, {});
    in_.assign(node_count_, {});
    by_id_.clear();
    for (LinkIndex e = 0; e < links_.size(); ++e) {
      out_[links_[e].tail].push_back(e);
      in_[links_[e].head].push_back(e);
      by_id_.emplace(links_[e].id, e);
    }
    auto by_id = [this](LinkIndex a, LinkIndex b) {
      return links_[a].id != links_[b].id ? links_[a].id < links_[b].id : a < b;
    };
    local_pos_.assign(links_.size(), 0);
    for (auto& lst : out_) {
      std::sort(lst.begin(), lst.end(), by_id);
      for (std::size_t i = 0; i < lst.size(); ++i) local_pos_[lst[i]] = i;
    }
    for (auto& lst : in_) std::sort(lst.begin(), lst.end(), by_id);

    std::vector<std::size_t> indeg(node_count_, 0);
    for (const auto& l : links_) ++indeg[l.head];
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (NodeId v = 0; v < node_count_; ++v) {
      if (indeg[v] == 0) ready.push(v);
    }
    topo_.clear();
    while (!ready.empty()) {
      NodeId v = ready.top();
      ready.pop();
      topo_.push_back(v);
      for (LinkIndex e : out_[v]) {
        if (--indeg[links_[e].head] == 0) ready.push(links_[e].head);
      }
    }
    if (topo_.size() != node_count_) topo_.clear();
  }

  std::size_t node_count_ = 0;
  std::vector<Link> links_;
  double inflow_ = 0.0;
  std::vector<std::vector<LinkIndex>> out_;
  std::vector<std::vector<LinkIndex>> in_;
  std::vector<std::size_t> local_pos_;
  std::unordered_map<std::string, LinkIndex> by_id_;
  std::vector<NodeId> topo_;
};

struct ValidationCheck {
  ErrorCode code;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  std::vector<NodeId> topological_order;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }

  std::optional<ValidationCheck> first_failure() const {
    for (const auto& c : checks) {
      if (!c.passed) return c;
    }
    return std::nullopt;
  }
};

namespace detail {

// Shared by FlowNetwork and d-expanded networks: `is_sink(v)` marks the
// destination node(s).
template <typename IsSink>
ValidationReport validate_graph(std::size_t node_count, const std::vector<Link>& links, IsSink is_sink) {
  ValidationReport report;
  auto add = [&](ErrorCode code, bool ok, std::string detail) {
    report.checks.push_back({code, ok, ok ? std::string() : std::move(detail)});
  };

  std::string bad_cap;
  for (const auto& l : links) {
    if (!(l.capacity > 0.0) || !std::isfinite(l.capacity)) {
      bad_cap = "link '" + l.id + "' has capacity " + std::to_string(l.capacity);
      break;
    }
  }
  add(ErrorCode::NonpositiveCapacity, bad_cap.empty(), bad_cap);

  std::unordered_set<std::string> seen;
  std::string dup;
  for (const auto& l : links) {
    if (!seen.insert(l.id).second) {
      dup = "link id '" + l.id + "' is used twice";
      break;
    }
  }
  add(ErrorCode::DuplicateLinkId, dup.empty(), dup);

  std::vector<std::vector<NodeId>> succ(node_count), pred(node_count);
  for (const auto& l : links) {
    succ[l.tail].push_back(l.head);
    pred[l.head].push_back(l.tail);
  }

  std::string origins;
  if (!pred[0].empty()) origins = "node 0 has incoming links";
  for (NodeId v = 1; v < node_count && origins.empty(); ++v) {
    if (!is_sink(v) && pred[v].empty() && !succ[v].empty()) {
      origins = "node " + std::to_string(v) + " has no incoming link";
    }
  }
  add(ErrorCode::MultipleOrigins, origins.empty(), origins);

  std::string dests;
  for (NodeId v = 0; v < node_count && dests.empty(); ++v) {
    if (is_sink(v) && !succ[v].empty()) dests = "destination node " + std::to_string(v) + " has outgoing links";
    if (!is_sink(v) && succ[v].empty() && !pred[v].empty()) {
      dests = "node " + std::to_string(v) + " has no outgoing link";
    }
  }
  add(ErrorCode::MultipleDestinations, dests.empty(), dests);

  std::vector<std::size_t> indeg(node_count, 0);
  for (const auto& l : links) ++indeg[l.head];
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId v = 0; v < node_count; ++v) {
    if (indeg[v] == 0) ready.push(v);
  }
  std::vector<NodeId> order;
  while (!ready.empty()) {
    NodeId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (NodeId w : succ[v]) {
      if (--indeg[w] == 0) ready.push(w);
    }
  }
  bool acyclic = order.size() == node_count;
  add(ErrorCode::CyclicGraph, acyclic, "the directed multigraph contains a cycle");
  if (acyclic) report.topological_order = order;

  auto reach = [&](NodeId start, const std::vector<std::vector<NodeId>>& adj, std::vector<char>& mark) {
    std::vector<NodeId> stack{start};
    mark[start] = 1;
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (NodeId w : adj[v]) {
        if (!mark[w]) {
          mark[w] = 1;
          stack.push_back(w);
        }
      }
    }
  };
  std::vector<char> from_origin(node_count, 0), to_sink(node_count, 0);
  reach(0, succ, from_origin);
  for (NodeId v = 0; v < node_count; ++v) {
    if (is_sink(v) && !to_sink[v]) reach(v, pred, to_sink);
  }
  std::string disconnected;
  for (NodeId v = 0; v < node_count && disconnected.empty(); ++v) {
    if (!from_origin[v] || !to_sink[v]) {
      disconnected = "node " + std::to_string(v) + " is not on a directed origin-destination path";
    }
  }
  add(ErrorCode::DisconnectedIntermediate, disconnected.empty(), disconnected);
  return report;
}

}  // namespace detail

inline ValidationReport validate(const FlowNetwork& net) {
  const NodeId n = net.destination();
  return detail::validate_graph(net.node_count(), net.links(), [n](NodeId v) { return v == n; });
}

/// Throws the first failing check as a CascadeError.
inline void require_valid(const FlowNetwork& net) {
  auto report = validate(net);
  if (auto bad = report.first_failure()) throw CascadeError(bad->code, bad->detail);
}

}  // namespace cascade
