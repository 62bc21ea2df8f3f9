#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cascade/network.hpp"
#include "cascade/subset.hpp"

namespace cascade {

enum class PolicyKind { Proportional, Bpa, Table };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Proportional: return "proportional";
    case PolicyKind::Bpa: return "bpa";
    case PolicyKind::Table: return "table";
  }
  return "unknown";
}

/// Distributed oblivious routing policy: node v splits its inflow `mu` over
/// the active subset of its outgoing links. The interface carries no residual
/// capacity or disturbance information.
///
/// `split` returns one entry per outgoing link of v (local order), zero
/// outside `active`, summing to `mu`. `active` must be non-empty.
class RoutingPolicy {
 public:
  virtual ~RoutingPolicy() = default;
  virtual PolicyKind kind() const = 0;
  virtual std::vector<double> split(NodeId v, LocalMask active, double mu) const = 0;
};

using PolicyPtr = std::shared_ptr<const RoutingPolicy>;

inline double conservation_tolerance(double mu) { return 1e-9 * std::max(1.0, std::abs(mu)); }

class ProportionalPolicy final : public RoutingPolicy {
 public:
  explicit ProportionalPolicy(const FlowNetwork& net) : caps_(net.node_count()) {
    for (NodeId v = 0; v < net.node_count(); ++v) {
      for (LinkIndex e : net.out_links(v)) caps_[v].push_back(net.capacity(e));
    }
  }

  PolicyKind kind() const override { return PolicyKind::Proportional; }

  std::vector<double> split(NodeId v, LocalMask active, double mu) const override {
    const auto& c = caps_[v];
    std::vector<double> x(c.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (contains(active, i)) total += c[i];
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (contains(active, i)) x[i] = c[i] / total * mu;
    }
    return x;
  }

 private:
  std::vector<std::vector<double>> caps_;
};

inline PolicyPtr proportional_policy(const FlowNetwork& net) { return std::make_shared<ProportionalPolicy>(net); }

/// One declared behaviour of a table policy: splits of node `node` over the
/// active set `links` at increasing inflow sample points.
struct TableEntry {
  NodeId node = 0;
  std::vector<std::string> links;
  std::vector<std::pair<double, std::vector<double>>> points;  // (mu, split aligned with `links`)
};

/// User-supplied splits, linear in mu between sample points and scaled
/// proportionally beyond the last one. Every non-empty subset of every
/// non-destination node must be declared.
class TablePolicy final : public RoutingPolicy {
 public:
  TablePolicy(const FlowNetwork& net, const std::vector<TableEntry>& entries) : degree_(net.node_count()) {
    for (NodeId v = 0; v < net.node_count(); ++v) degree_[v] = net.out_links(v).size();
    for (const auto& entry : entries) {
      LocalMask mask = 0;
      std::vector<std::size_t> pos;
      for (const auto& id : entry.links) {
        LinkIndex e = net.link_index(id);
        if (net.link(e).tail != entry.node) {
          throw CascadeError(ErrorCode::SchemaError, "link '" + id + "' does not leave node " + std::to_string(entry.node));
        }
        pos.push_back(net.local_position(e));
        mask |= single(net.local_position(e));
      }
      if (mask == 0) throw CascadeError(ErrorCode::SchemaError, "table entry with an empty link set");
      Samples samples;
      for (const auto& [mu, values] : entry.points) {
        if (values.size() != pos.size()) throw CascadeError(ErrorCode::SchemaError, "split size does not match link list");
        std::vector<double> x(degree_[entry.node], 0.0);
        double total = 0.0;
        for (std::size_t k = 0; k < pos.size(); ++k) {
          x[pos[k]] = values[k];
          total += values[k];
        }
        if (std::abs(total - mu) > conservation_tolerance(mu)) {
          throw CascadeError(ErrorCode::PolicyConservationViolation,
                             "table split at node " + std::to_string(entry.node) + " does not sum to mu");
        }
        samples.emplace_back(mu, std::move(x));
      }
      if (samples.empty()) throw CascadeError(ErrorCode::SchemaError, "table entry without sample points");
      std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      table_[{entry.node, mask}] = std::move(samples);
    }
    for (NodeId v = 0; v + 1 < net.node_count(); ++v) {
      for (LocalMask m = 1; m <= full_mask(degree_[v]) && degree_[v] > 0; ++m) {
        if (!table_.count({v, m})) {
          throw CascadeError(ErrorCode::MissingPolicyEntry,
                             "no table entry for node " + std::to_string(v) + " subset " + std::to_string(m));
        }
      }
    }
  }

  PolicyKind kind() const override { return PolicyKind::Table; }

  std::vector<double> split(NodeId v, LocalMask active, double mu) const override {
    auto it = table_.find({v, active});
    if (it == table_.end()) {
      throw CascadeError(ErrorCode::MissingPolicyEntry, "no table entry for node " + std::to_string(v));
    }
    const auto& s = it->second;
    if (mu <= s.front().first) return scaled(s.front(), active, mu);
    if (mu >= s.back().first) return scaled(s.back(), active, mu);
    auto hi = std::upper_bound(s.begin(), s.end(), mu, [](double m, const auto& p) { return m < p.first; });
    auto lo = hi - 1;
    double w = (mu - lo->first) / (hi->first - lo->first);
    std::vector<double> x(lo->second.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1 - w) * lo->second[i] + w * hi->second[i];
    return x;
  }

 private:
  using Samples = std::vector<std::pair<double, std::vector<double>>>;

  static std::vector<double> scaled(const std::pair<double, std::vector<double>>& p, LocalMask active, double mu) {
    auto x = p.second;
    if (p.first == mu) return x;
    if (p.first > 0) {
      for (auto& xi : x) xi *= mu / p.first;
      return x;
    }
    // only a sample at mu = 0 is available: spread evenly over the active set
    const double share = mu / popcount(active);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = contains(active, i) ? share : 0.0;
    return x;
  }

  std::vector<std::size_t> degree_;
  std::map<std::pair<NodeId, LocalMask>, Samples> table_;
};

// ---------------------------------------------------------------------------
// Monotonicity checks

enum class MonotonicityProperty { Link, Flow };

struct MonotonicityWitness {
  NodeId node = 0;
  LocalMask larger_set = 0;   // J (link) or the checked set (flow)
  LocalMask smaller_set = 0;  // K ⊂ J (link); equal to larger_set (flow)
  double mu_low = 0.0;        // flow: mu_1; link: the shared mu
  double mu_high = 0.0;       // flow: mu_2
  std::size_t link = 0;       // local position of the violating link
  double value_expected_low = 0.0;
  double value_expected_high = 0.0;
};

struct MonotonicityReport {
  MonotonicityProperty property = MonotonicityProperty::Link;
  std::vector<NodeId> checked_nodes;
  std::vector<MonotonicityWitness> witnesses;
  double threshold = 1e-7;

  bool passed() const { return witnesses.empty(); }
};

struct GridOptions {
  std::size_t points = 201;
  double threshold = 1e-7;
  std::size_t max_witnesses_per_node = 64;
};

/// Largest inflow node v can see: λ at the origin, Σ C over incoming links elsewhere.
inline double max_node_inflow(const FlowNetwork& net, NodeId v) {
  if (v == net.origin()) return net.inflow();
  double s = 0.0;
  for (LinkIndex e : net.in_links(v)) s += net.capacity(e);
  return s;
}

inline std::vector<double> mu_grid(double hi, std::size_t points) {
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = points == 1 ? hi : hi * double(i) / double(points - 1);
  return g;
}

/// Replays a witness; true iff the violation is still there.
inline bool replay(const MonotonicityWitness& w, MonotonicityProperty property, const RoutingPolicy& policy,
                   double threshold) {
  if (property == MonotonicityProperty::Link) {
    auto big = policy.split(w.node, w.larger_set, w.mu_low);
    auto small = policy.split(w.node, w.smaller_set, w.mu_low);
    return big[w.link] > small[w.link] + threshold && big[w.link] == w.value_expected_low &&
           small[w.link] == w.value_expected_high;
  }
  auto lo = policy.split(w.node, w.larger_set, w.mu_low);
  auto hi = policy.split(w.node, w.larger_set, w.mu_high);
  return lo[w.link] > hi[w.link] + threshold && lo[w.link] == w.value_expected_low &&
         hi[w.link] == w.value_expected_high;
}

/// G^v(J, mu) <= G^v(K, mu) on K for every K ⊆ J ⊆ E_v^+, sampled on a mu grid.
inline MonotonicityReport check_link_monotonicity(const RoutingPolicy& policy, const FlowNetwork& net,
                                                  const GridOptions& opt = {}) {
  MonotonicityReport report;
  report.property = MonotonicityProperty::Link;
  report.threshold = opt.threshold;
  for (NodeId v = 0; v < net.destination(); ++v) {
    const std::size_t d = net.out_links(v).size();
    if (d == 0) continue;
    report.checked_nodes.push_back(v);
    std::size_t found = 0;
    for (double mu : mu_grid(max_node_inflow(net, v), opt.points)) {
      std::map<LocalMask, std::vector<double>> cache;
      auto get = [&](LocalMask m) -> const std::vector<double>& {
        auto it = cache.find(m);
        if (it == cache.end()) it = cache.emplace(m, policy.split(v, m, mu)).first;
        return it->second;
      };
      for (LocalMask big = 1; big <= full_mask(d); ++big) {
        for (LocalMask small = (big - 1) & big; small != 0; small = (small - 1) & big) {
          const auto& xb = get(big);
          const auto& xs = get(small);
          for (std::size_t i : members(small)) {
            if (xb[i] > xs[i] + opt.threshold && found < opt.max_witnesses_per_node) {
              report.witnesses.push_back({v, big, small, mu, mu, i, xb[i], xs[i]});
              ++found;
            }
          }
        }
      }
    }
  }
  return report;
}

/// mu_1 <= mu_2 implies G^v(J, mu_1) <= G^v(J, mu_2), at every v outside
/// {0, n}. Each grid value is compared with the running maximum so that slow
/// drifts below the threshold per step are still caught.
inline MonotonicityReport check_flow_monotonicity(const RoutingPolicy& policy, const FlowNetwork& net,
                                                  const GridOptions& opt = {}) {
  MonotonicityReport report;
  report.property = MonotonicityProperty::Flow;
  report.threshold = opt.threshold;
  for (NodeId v = 1; v < net.destination(); ++v) {
    const std::size_t d = net.out_links(v).size();
    if (d == 0) continue;
    report.checked_nodes.push_back(v);
    auto grid = mu_grid(max_node_inflow(net, v), opt.points);
    std::size_t found = 0;
    for (LocalMask set = 1; set <= full_mask(d); ++set) {
      std::vector<double> best(d, -1.0), best_mu(d, 0.0);
      for (double mu : grid) {
        auto x = policy.split(v, set, mu);
        for (std::size_t i : members(set)) {
          if (best[i] > x[i] + opt.threshold && found < opt.max_witnesses_per_node) {
            report.witnesses.push_back({v, set, set, best_mu[i], mu, i, best[i], x[i]});
            ++found;
          }
          if (x[i] >= best[i]) {
            best[i] = x[i];
            best_mu[i] = mu;
          }
        }
      }
    }
  }
  return report;
}

}  // namespace cascade
