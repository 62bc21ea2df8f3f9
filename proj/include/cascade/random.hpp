#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cascade/cuts.hpp"
#include "cascade/network.hpp"

namespace cascade::random {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Capacities drawn on a 0.05 lattice keep generated scenarios readable.
inline double capacity(Rng& rng, double lo = 0.5, double hi = 3.0) {
  return std::round(uniform(rng, lo, hi) * 20.0) / 20.0;
}

inline std::vector<Link> name_links(std::vector<Link> links) {
  for (std::size_t i = 0; i < links.size(); ++i) links[i].id = "e" + std::to_string(i + 1);
  return links;
}

/// λ as a random fraction of the max-flow value.
inline FlowNetwork with_random_inflow(const FlowNetwork& net, Rng& rng, double lo = 0.3, double hi = 0.7) {
  const double cap = max_flow(net).value;
  return net.with_inflow(std::round(uniform(rng, lo, hi) * cap * 100.0) / 100.0);
}

struct DagOptions {
  std::size_t min_nodes = 3;
  std::size_t max_nodes = 8;
  std::size_t max_links = 10;
  std::size_t max_out_degree = 3;
};

/// Random acyclic network whose intermediate nodes all lie on a 0 → n path.
/// Links go from lower to higher labels, so the labels are a topological order.
inline FlowNetwork random_dag(Rng& rng, const DagOptions& opt = {}) {
  for (;;) {
    const std::size_t n = pick(rng, opt.min_nodes, opt.max_nodes);
    const NodeId dest = n - 1;
    std::vector<Link> links;
    std::vector<std::size_t> in(n, 0), out(n, 0);
    auto add = [&](NodeId u, NodeId v) {
      links.push_back({"", u, v, capacity(rng)});
      ++out[u];
      ++in[v];
    };
    for (NodeId v = 1; v < dest; ++v) add(pick(rng, 0, v - 1), v);
    for (NodeId v = dest; v-- > 1;) {
      if (out[v] == 0) add(v, pick(rng, v + 1, dest));
    }
    if (out[0] == 0) add(0, pick(rng, 1, dest));
    if (in[dest] == 0) add(pick(rng, 0, dest - 1), dest);
    const std::size_t extra = links.size() < opt.max_links ? pick(rng, 0, opt.max_links - links.size()) : 0;
    for (std::size_t k = 0; k < extra; ++k) {
      const NodeId u = pick(rng, 0, dest - 1);
      add(u, pick(rng, u + 1, dest));
    }
    if (links.size() > opt.max_links) continue;
    if (*std::max_element(out.begin(), out.end()) > opt.max_out_degree) continue;
    FlowNetwork net(n, name_links(std::move(links)), 0.0);
    if (!validate(net).ok()) continue;
    return with_random_inflow(net, rng);
  }
}

struct TreeOptions {
  std::size_t max_links = 12;
  std::size_t max_depth = 3;
  std::size_t max_origin_degree = 3;
};

/// Random tree (after removing the destination) assembled from the
/// building blocks known to make BPA routing flow-monotone below the origin:
/// two links to the destination; a link to the destination next to a
/// no-larger link into such a pair; two equal links into such pairs; and
/// non-branching chains whose minimum capacity is the link they replace.
inline FlowNetwork random_monotone_tree(Rng& rng, const TreeOptions& opt = {}) {
  for (;;) {
    std::vector<std::pair<NodeId, NodeId>> ends;
    std::vector<double> caps;
    std::size_t nodes = 1;  // node 0; destination is labelled last
    std::vector<std::size_t> to_dest;  // indices of links whose head is the destination
    auto link = [&](NodeId u, std::optional<NodeId> v, double c) {
      ends.push_back({u, v.value_or(0)});
      caps.push_back(c);
      if (!v) to_dest.push_back(ends.size() - 1);
    };
    auto node = [&]() { return nodes++; };

    // A link of capacity c from u to the destination, optionally through a chain.
    auto leaf = [&](NodeId u, double c) {
      if (pick(rng, 0, 3) == 0) {
        NodeId w = node();
        link(u, w, c + capacity(rng, 0.0, 1.0));
        link(w, std::nullopt, c);
      } else {
        link(u, std::nullopt, c);
      }
    };
    auto pair_node = [&](NodeId w) {
      leaf(w, capacity(rng));
      leaf(w, capacity(rng));
    };
    std::function<void(NodeId, std::size_t)> grow = [&](NodeId v, std::size_t depth) {
      const std::size_t kind = depth >= opt.max_depth ? 0 : pick(rng, 0, 3);
      if (kind == 0) {
        pair_node(v);
      } else if (kind == 1) {
        const double c1 = capacity(rng);
        NodeId w = node();
        link(v, w, c1);
        pair_node(w);
        leaf(v, c1 + capacity(rng, 0.0, 1.5));
      } else if (kind == 2) {
        const double c = capacity(rng);
        for (int i = 0; i < 2; ++i) {
          NodeId w = node();
          link(v, w, c);
          pair_node(w);
        }
      } else {
        NodeId w = node();
        link(v, w, capacity(rng, 1.0, 4.0));
        grow(w, depth + 1);
      }
    };

    const std::size_t degree = pick(rng, 1, opt.max_origin_degree);
    for (std::size_t i = 0; i < degree; ++i) {
      const std::size_t kind = pick(rng, 0, 2);
      if (kind == 0) {
        leaf(0, capacity(rng));
      } else {
        NodeId w = node();
        link(0, w, capacity(rng, 1.0, 4.0));
        grow(w, kind == 1 ? opt.max_depth : 1);
      }
    }
    if (ends.size() > opt.max_links) continue;
    const NodeId dest = nodes;
    std::vector<Link> links;
    for (std::size_t i = 0; i < ends.size(); ++i) {
      const bool d = std::find(to_dest.begin(), to_dest.end(), i) != to_dest.end();
      links.push_back({"", ends[i].first, d ? dest : ends[i].second, caps[i]});
    }
    FlowNetwork net(nodes + 1, name_links(std::move(links)), 0.0);
    if (!validate(net).ok()) continue;
    return with_random_inflow(net, rng);
  }
}

/// Random tree with out-degree <= max_out_degree (no structural guarantee).
inline FlowNetwork random_tree(Rng& rng, std::size_t max_links = 8, std::size_t max_out_degree = 3) {
  for (;;) {
    std::vector<std::pair<NodeId, int>> ends;  // head -1 = destination
    std::vector<double> caps;
    std::size_t nodes = 1;
    std::vector<NodeId> open{0};
    while (!open.empty()) {
      NodeId v = open.back();
      open.pop_back();
      const std::size_t d = pick(rng, v == 0 ? 1 : 1, max_out_degree);
      for (std::size_t i = 0; i < d; ++i) {
        const bool internal = ends.size() + open.size() + 2 < max_links && pick(rng, 0, 2) == 0;
        if (internal) {
          ends.push_back({v, int(nodes)});
          open.push_back(nodes++);
        } else {
          ends.push_back({v, -1});
        }
        caps.push_back(capacity(rng));
      }
    }
    if (ends.size() > max_links) continue;
    std::vector<Link> links;
    for (std::size_t i = 0; i < ends.size(); ++i) {
      links.push_back({"", ends[i].first, ends[i].second < 0 ? nodes : NodeId(ends[i].second), caps[i]});
    }
    FlowNetwork net(nodes + 1, name_links(std::move(links)), 0.0);
    if (!validate(net).ok()) continue;
    return with_random_inflow(net, rng);
  }
}

}  // namespace cascade::random
