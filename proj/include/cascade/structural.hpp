#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cascade/resilience.hpp"
#include "cascade/tree.hpp"

namespace cascade {

enum class StructuralVerdict { ProvenMonotone, Unknown };

inline const char* to_string(StructuralVerdict v) {
  return v == StructuralVerdict::ProvenMonotone ? "proven-monotone" : "unknown";
}

/// How an outgoing link looks from its tail once chains are collapsed and
/// leaf-equivalent subtrees are cut off.
enum class LinkShape {
  Leaf,  // S_e(μ) = [c - μ]^+: direct, chained, or concatenated onto a subtree
  Pair,  // into a node whose two outgoing links are both leaves
  Other,
};

struct NodeVerdict {
  NodeId node = 0;
  StructuralVerdict verdict = StructuralVerdict::Unknown;
  std::string pattern;  // "single-link", "two-leaves", "leaf-and-pair", "equal-pairs" or "none"
};

struct StructuralReport {
  std::vector<NodeVerdict> nodes;  // one per non-destination node, by label

  /// Every node other than the origin is proven flow-monotone.
  bool below_origin_proven() const {
    for (const auto& n : nodes) {
      if (n.node != 0 && n.verdict != StructuralVerdict::ProvenMonotone) return false;
    }
    return true;
  }
};

namespace detail {

struct EffectiveLink {
  LinkShape shape = LinkShape::Other;
  double capacity = 0.0;
};

class StructuralClassifier {
 public:
  StructuralClassifier(const FlowNetwork& net, const ResilienceOracle& oracle) : net_(net), oracle_(oracle) {}

  EffectiveLink classify(LinkIndex e) const {
    double cap = net_.capacity(e);
    NodeId w = net_.link(e).head;
    // non-branching chain: replace by its minimum capacity
    while (w != net_.destination() && net_.out_links(w).size() == 1) {
      const LinkIndex next = net_.out_links(w)[0];
      cap = std::min(cap, net_.capacity(next));
      w = net_.link(next).head;
    }
    if (w == net_.destination() || leaf_equivalent(cap, w)) return {LinkShape::Leaf, cap};
    auto out = net_.out_links(w);
    if (out.size() == 2 && classify(out[0]).shape == LinkShape::Leaf && classify(out[1]).shape == LinkShape::Leaf) {
      return {LinkShape::Pair, cap};
    }
    return {LinkShape::Other, cap};
  }

  NodeVerdict verdict(NodeId v) const {
    NodeVerdict out{v, StructuralVerdict::Unknown, "none"};
    auto links = net_.out_links(v);
    if (links.size() == 1) {
      out.verdict = StructuralVerdict::ProvenMonotone;
      out.pattern = "single-link";
      return out;
    }
    if (links.size() != 2) return out;
    auto a = classify(links[0]), b = classify(links[1]);
    if (a.shape == LinkShape::Pair && b.shape == LinkShape::Leaf) std::swap(a, b);
    if (a.shape == LinkShape::Leaf && b.shape == LinkShape::Leaf) {
      out.pattern = "two-leaves";
    } else if (a.shape == LinkShape::Leaf && b.shape == LinkShape::Pair && a.capacity >= b.capacity) {
      out.pattern = "leaf-and-pair";
    } else if (a.shape == LinkShape::Pair && b.shape == LinkShape::Pair && a.capacity == b.capacity) {
      out.pattern = "equal-pairs";
    } else {
      return out;
    }
    out.verdict = StructuralVerdict::ProvenMonotone;
    return out;
  }

 private:
  // [c - μ]^+ <= S(E_w^+, 0, μ) on [0, c], checked on a fine grid plus the
  // curve's own breakpoints.
  bool leaf_equivalent(double c, NodeId w) const {
    const auto& curve = oracle_.node_curve(w);
    std::vector<double> points = mu_grid(c, 401);
    for (double x : curve.xs()) {
      if (x <= c) points.push_back(x);
    }
    for (double mu : points) {
      if (std::max(c - mu, 0.0) > curve(mu) + 1e-9) return false;
    }
    return true;
  }

  const FlowNetwork& net_;
  const ResilienceOracle& oracle_;
};

}  // namespace detail

/// Per-node sufficient conditions for flow monotonicity of BPA routing on
/// tree networks (viewed with one destination copy per final link). A node
/// is proven monotone when its subtree reduces to one of the basic shapes
/// after collapsing chains and cutting leaf-equivalent subtrees; anything
/// else is "unknown", which is not a violation.
inline StructuralReport structural_flow_monotonicity(const FlowNetwork& net, const ResilienceOracle& oracle) {
  if (!is_tree(net)) throw CascadeError(ErrorCode::NotATree, "structural conditions apply to trees only");
  detail::StructuralClassifier c(net, oracle);
  StructuralReport report;
  for (NodeId v = 0; v < net.destination(); ++v) report.nodes.push_back(c.verdict(v));
  return report;
}

inline StructuralReport structural_flow_monotonicity(const FlowNetwork& net) {
  if (!is_tree(net)) throw CascadeError(ErrorCode::NotATree, "structural conditions apply to trees only");
  ResilienceOracle oracle(net);
  return structural_flow_monotonicity(net, oracle);
}

}  // namespace cascade
