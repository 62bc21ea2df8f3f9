#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <tuple>
#include <vector>

#include "cascade/cuts.hpp"
#include "cascade/dynamics.hpp"
#include "cascade/lp.hpp"
#include "cascade/network.hpp"
#include "cascade/pwl.hpp"
#include "cascade/routing.hpp"
#include "cascade/subset.hpp"

namespace cascade {

// ---------------------------------------------------------------------------
// Simple bounds

struct SimpleBounds {
  double lower = 0.0;       // min_e C_e - f_e(0)
  LinkIndex lower_link = 0;
  double upper = 0.0;       // min_U C_U - λ
  Cut cut;
};

inline SimpleBounds simple_bounds(const FlowNetwork& net, const RoutingPolicy& policy,
                                  const DynamicsOptions& opt = {}) {
  auto s = initial_state(net, policy, opt);
  SimpleBounds b;
  b.lower = std::numeric_limits<double>::infinity();
  for (LinkIndex e = 0; e < net.link_count(); ++e) {
    const double gap = net.capacity(e) - s.flow[e];
    if (gap < b.lower) {
      b.lower = gap;
      b.lower_link = e;
    }
  }
  auto [cut, residual] = min_residual_cut(net);
  b.upper = residual;
  b.cut = std::move(cut);
  return b;
}

// ---------------------------------------------------------------------------
// Two parallel links: closed-form maximal margin and optimal split

struct TwoLinkSolution {
  double r_star = 0.0;
  std::optional<double> x1;  // undefined once λ exceeds C1 + C2
};

inline TwoLinkSolution two_link_closed_form(double c1, double c2, double lambda) {
  const double lo = std::min(c1, c2), hi = std::max(c1, c2), sum = c1 + c2;
  TwoLinkSolution s;
  if (lambda <= lo) {
    s.r_star = sum - 1.5 * lambda;
    s.x1 = lambda / 2;
  } else if (lambda <= hi) {
    s.r_star = lo / 2 + hi - lambda;
    s.x1 = c1 / 2 + (c1 > c2 ? lambda - sum / 2 : 0.0);
  } else if (lambda <= sum) {
    s.r_star = sum / 2 - lambda / 2;
    s.x1 = lambda / 2 + (c1 - c2) / 2;
  } else {
    s.r_star = 0.0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Backward propagation oracle

struct BpaOptions {
  std::size_t curve_points = 401;   // base samples of each node curve
  double curve_tol = 1e-10;         // chord tolerance for nodes solved exactly (out-degree <= 2)
  std::size_t curve_depth = 30;
  std::size_t curve_points_grid = 101;  // nodes solved by grid search (out-degree >= 3)
  double curve_tol_grid = 2e-4;
  std::size_t curve_depth_grid = 3;
  std::size_t grid_points = 48;     // cells per coordinate when |J| = 3
  std::size_t grid_points_high = 6; // cells per coordinate when |J| >= 4
  std::size_t refine_rounds = 2;
  std::size_t refine_factor = 10;
  std::size_t candidates = 3;
};

/// Value functions S(J, r, μ) of the backward recursion, computed node by node
/// in reverse topological order. Each node keeps μ ↦ S(E_v^+, 0, μ) as a
/// sampled piecewise-linear curve; everything else is evaluated on demand.
///
/// Optionally restricted to a set of active links and/or alternative
/// capacities (used for residual graphs and for comparing networks).
class ResilienceOracle {
 public:
  explicit ResilienceOracle(FlowNetwork net, BpaOptions opt = {}, std::vector<char> active = {},
                            std::vector<double> capacities = {})
      : net_(std::move(net)), opt_(opt), active_(std::move(active)), caps_(std::move(capacities)) {
    if (active_.empty()) active_.assign(net_.link_count(), 1);
    if (caps_.empty()) caps_ = net_.capacities();
    if (!net_.is_acyclic()) throw CascadeError(ErrorCode::CyclicGraph, "the recursion needs an acyclic network");
    const std::size_t nodes = net_.node_count();
    masks_.assign(nodes, 0);
    for (NodeId v = 0; v < nodes; ++v) {
      auto out = net_.out_links(v);
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (active_[out[i]]) masks_[v] |= single(i);
      }
      if (popcount(masks_[v]) > 3) bound_only_ = true;
    }
    curves_.assign(nodes, PwlFunction::zero());
    curves_[net_.destination()] = PwlFunction::infinite();
    const auto& order = net_.topological_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (*it != net_.destination()) build_curve(*it);
    }
  }

  const FlowNetwork& network() const { return net_; }
  const BpaOptions& options() const { return opt_; }
  double capacity(LinkIndex e) const { return caps_[e]; }
  bool link_active(LinkIndex e) const { return active_[e] != 0; }
  LocalMask active_mask(NodeId v) const { return masks_[v]; }
  const std::vector<char>& active_links() const { return active_; }
  const std::vector<double>& capacities() const { return caps_; }

  /// False when some node has more than three active outgoing links; values
  /// there are still computed but only as bounds.
  bool optimality_guaranteed() const { return !bound_only_; }

  const PwlFunction& node_curve(NodeId v) const { return curves_[v]; }

  /// S_e(μ) = min([C_e - μ]^+, S(E_{τe}^+, 0, μ)).
  double link_value(LinkIndex e, double mu) const {
    if (!active_[e]) return 0.0;
    const double own = std::max(caps_[e] - mu, 0.0);
    const auto& head = curves_[net_.link(e).head];
    return head.is_infinite() ? own : std::min(own, head(mu));
  }

  double local_capacity(NodeId v, std::size_t i) const { return caps_[net_.out_links(v)[i]]; }
  double local_link_value(NodeId v, std::size_t i, double mu) const { return link_value(net_.out_links(v)[i], mu); }

  /// Non-emptiness of X_v(J, r, μ) = {r <= x <= C, Σx = μ}.
  bool feasible(NodeId v, LocalMask J, std::span<const double> r, double mu) const {
    if (J == 0) return false;
    const double eps = 1e-12 * std::max(1.0, mu);
    double rs = 0.0, cs = 0.0;
    for (std::size_t i : members(J)) {
      const double ri = r.empty() ? 0.0 : r[i];
      if (ri > local_capacity(v, i) + eps) return false;
      rs += ri;
      cs += local_capacity(v, i);
    }
    return rs <= mu + eps && cs >= mu - eps;
  }

  /// S(J, r, μ) at node v; `r` is indexed by local position (empty = 0).
  double value(NodeId v, LocalMask J, std::span<const double> r, double mu) const {
    return solve(v, J, r, mu, false).value;
  }

  /// A maximiser in g(J, r, μ), lexicographically smallest by link id among
  /// the maximisers found. Throws EmptyFeasibleSet.
  std::vector<double> argmax(NodeId v, LocalMask J, std::span<const double> r, double mu) const {
    if (!feasible(v, J, r, mu)) {
      throw CascadeError(ErrorCode::EmptyFeasibleSet, "no feasible split at node " + std::to_string(v));
    }
    return solve(v, J, r, mu, true).x;
  }

  /// S*(N, λ) = S(E_0^+, 0, λ).
  double s_star() const { return value(net_.origin(), masks_[net_.origin()], {}, net_.inflow()); }
  double s_star(double lambda) const { return value(net_.origin(), masks_[net_.origin()], {}, lambda); }

 private:
  struct Result {
    double value = 0.0;
    std::vector<double> x;
  };

  struct PairSolution {
    bool feasible = false;
    double lo = 0.0, hi = 0.0;  // unconstrained domain of x_a
    double y1 = 0.0, y2 = 0.0;  // maximiser interval
    double value = 0.0;
    double sa_mu = 0.0, sb_mu = 0.0;
  };

  static constexpr int kBisection = 200;

  double tie_eps(double m) const { return 1e-12 * std::max(1.0, std::abs(m)); }

  // Unconstrained two-link problem at node v over {a, b}: maximise
  // min(A(y), B(y)) with A(y) = S_a(y) + S_b(μ) nonincreasing and
  // B(y) = S_b(μ - y) + S_a(μ) nondecreasing in y = x_a.
  PairSolution pair(NodeId v, std::size_t a, std::size_t b, double mu) const {
    const auto key = std::make_tuple(v, a, b, mu);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = pair_cache_.find(key);
      if (it != pair_cache_.end()) return it->second;
    }
    PairSolution p;
    const double ca = local_capacity(v, a), cb = local_capacity(v, b);
    p.lo = std::max(0.0, mu - cb);
    p.hi = std::min(ca, mu);
    const double eps = 1e-12 * std::max(1.0, mu);
    if (p.lo > p.hi + eps) {
      store(key, p);
      return p;
    }
    p.hi = std::max(p.hi, p.lo);
    p.feasible = true;
    p.sa_mu = local_link_value(v, a, mu);
    p.sb_mu = local_link_value(v, b, mu);
    auto A = [&](double y) { return local_link_value(v, a, y) + p.sb_mu; };
    auto B = [&](double y) { return local_link_value(v, b, mu - y) + p.sa_mu; };
    auto f = [&](double y) { return std::min(A(y), B(y)); };

    if (A(p.lo) <= B(p.lo)) {
      p.value = A(p.lo);
      p.y1 = p.lo;
      p.y2 = last_at_least(A, p.value - tie_eps(p.value), p.lo, p.hi);
    } else if (A(p.hi) >= B(p.hi)) {
      p.value = B(p.hi);
      p.y2 = p.hi;
      p.y1 = first_at_least(B, p.value - tie_eps(p.value), p.lo, p.hi);
    } else {
      double lo = p.lo, hi = p.hi;  // A > B at lo, A < B at hi
      for (int i = 0; i < kBisection && hi - lo > 1e-15 * std::max(1.0, mu); ++i) {
        const double m = 0.5 * (lo + hi);
        (A(m) > B(m) ? lo : hi) = m;
      }
      p.value = std::max(f(lo), f(hi));
      p.y1 = first_at_least(B, p.value - tie_eps(p.value), p.lo, hi);
      p.y2 = last_at_least(A, p.value - tie_eps(p.value), lo, p.hi);
    }
    store(key, p);
    return p;
  }

  void store(const std::tuple<NodeId, std::size_t, std::size_t, double>& key, const PairSolution& p) const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (pair_cache_.size() > 200000) pair_cache_.clear();
    pair_cache_.emplace(key, p);
  }

  // Smallest y in [lo, hi] with g(y) >= level, g nondecreasing (hi if none).
  template <typename G>
  static double first_at_least(G g, double level, double lo, double hi) {
    if (g(lo) >= level) return lo;
    for (int i = 0; i < kBisection && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
      const double m = 0.5 * (lo + hi);
      (g(m) >= level ? hi : lo) = m;
    }
    return hi;
  }

  // Largest y in [lo, hi] with g(y) >= level, g nonincreasing (lo if none).
  template <typename G>
  static double last_at_least(G g, double level, double lo, double hi) {
    if (g(hi) >= level) return hi;
    for (int i = 0; i < kBisection && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
      const double m = 0.5 * (lo + hi);
      (g(m) >= level ? lo : hi) = m;
    }
    return lo;
  }

  Result solve(NodeId v, LocalMask J, std::span<const double> r, double mu, bool want_x, bool coarse = false) const {
    const std::size_t degree = net_.out_links(v).size();
    Result res;
    if (want_x) res.x.assign(degree, 0.0);
    if (!feasible(v, J, r, mu)) return res;
    auto rr = [&](std::size_t i) { return r.empty() ? 0.0 : r[i]; };
    const auto m = members(J);
    if (m.size() == 1) {
      res.value = local_link_value(v, m[0], mu);
      if (want_x) res.x[m[0]] = mu;
      return res;
    }
    if (m.size() == 2) {
      const std::size_t a = m[0], b = m[1];
      const double y = constrained_pair(v, a, b, pair(v, a, b, mu), rr(a), rr(b), mu, want_x, res.value);
      if (want_x) {
        res.x[a] = y;
        res.x[b] = mu - y;
      }
      return res;
    }
    return grid_search(v, m, r, mu, want_x, coarse);
  }

  // Two-link problem over {a, b} with lower bounds (ra, rb), given the
  // unconstrained solution p. Stores the value and returns the chosen x_a
  // (the smallest maximiser when want_x).
  double constrained_pair(NodeId v, std::size_t a, std::size_t b, const PairSolution& p, double ra, double rb,
                          double mu, bool want_x, double& value) const {
    const double eps = 1e-12 * std::max(1.0, mu);
    const double L = std::max(ra, p.lo);
    double H = std::min(p.hi, mu - rb);
    if (!p.feasible || L > H + eps) {
      value = 0.0;
      return L;
    }
    H = std::max(H, L);
    if (p.y2 < L) {
      value = std::min(local_link_value(v, a, L) + p.sb_mu, local_link_value(v, b, mu - L) + p.sa_mu);
      return L;
    }
    if (p.y1 > H) {
      auto B = [&](double y) { return local_link_value(v, b, mu - y) + p.sa_mu; };
      value = std::min(local_link_value(v, a, H) + p.sb_mu, B(H));
      return want_x ? first_at_least(B, value - tie_eps(value), L, H) : H;
    }
    value = p.value;
    return std::max(p.y1, L);
  }

  // min_e S_e(x_e) + S(J \ {e}, x, μ)
  double objective(NodeId v, const std::vector<std::size_t>& m, LocalMask J, const std::vector<double>& x,
                   double mu) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t e : m) {
      const double term = local_link_value(v, e, x[e]) + solve(v, without(J, e), x, mu, false, true).value;
      best = std::min(best, term);
    }
    return best;
  }

  // Maximin over the simplex section {r <= x <= C, Σx = μ} for |J| >= 3:
  // coarse grid on all but the last coordinate, then local refinement.
  // With |J| = 3 the three two-link subproblems are solved once up front;
  // larger sets (and the subproblems nested inside them) use the coarse grid
  // without refinement.
  Result grid_search(NodeId v, const std::vector<std::size_t>& m, std::span<const double> r, double mu,
                     bool want_x, bool coarse) const {
    const std::size_t degree = net_.out_links(v).size();
    const std::size_t k = m.size();
    LocalMask J = 0;
    for (std::size_t e : m) J |= single(e);
    std::vector<double> lo(k), cap(k);
    for (std::size_t i = 0; i < k; ++i) {
      lo[i] = r.empty() ? 0.0 : r[m[i]];
      cap[i] = local_capacity(v, m[i]);
    }
    // suffix sums for conditional bounds
    std::vector<double> lo_suffix(k + 1, 0.0), cap_suffix(k + 1, 0.0);
    for (std::size_t i = k; i-- > 0;) {
      lo_suffix[i] = lo_suffix[i + 1] + lo[i];
      cap_suffix[i] = cap_suffix[i + 1] + cap[i];
    }
    auto bounds = [&](std::size_t i, double remaining) {
      double a = std::max(lo[i], remaining - cap_suffix[i + 1]);
      double b = std::min(cap[i], remaining - lo_suffix[i + 1]);
      return std::make_pair(a, std::max(a, b));
    };

    // Evaluated points, stored flat: value, the k coordinates of J and the
    // grid step of each coordinate at the time the point was visited.
    std::vector<double> values, coords, spacing;
    auto coord = [&](std::size_t p) { return std::span<const double>(coords.data() + p * k, k); };
    std::vector<double> x(degree, 0.0);

    std::array<PairSolution, 3> rest;
    if (k == 3) {
      for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t a = m[i == 0 ? 1 : 0], b = m[i == 2 ? 1 : 2];
        rest[i] = pair(v, a, b, mu);
      }
    }
    auto evaluate = [&]() {
      if (k != 3) return objective(v, m, J, x, mu);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t a = m[i == 0 ? 1 : 0], b = m[i == 2 ? 1 : 2];
        double inner = 0.0;
        constrained_pair(v, a, b, rest[i], x[a], x[b], mu, false, inner);
        best = std::min(best, local_link_value(v, m[i], x[m[i]]) + inner);
      }
      return best;
    };

    // Enumerates coordinates 0..k-2 on a grid of `cells` cells; `centre` and
    // `half` restrict each coordinate to a window when refining.
    std::vector<double> steps(k, 0.0);
    std::function<void(std::size_t, double, std::size_t, const double*, const double*)> enumerate =
        [&](std::size_t i, double remaining, std::size_t cells, const double* centre, const double* half) {
          auto [a, b] = bounds(i, remaining);
          if (i + 1 == k) {
            x[m[i]] = std::clamp(remaining, a, b);
            values.push_back(evaluate());
            for (std::size_t j = 0; j < k; ++j) coords.push_back(x[m[j]]);
            spacing.insert(spacing.end(), steps.begin(), steps.end());
            return;
          }
          double from = a, to = b;
          if (centre) {
            from = std::max(a, centre[i] - half[i]);
            to = std::min(b, centre[i] + half[i]);
            if (from > to) from = to = std::clamp(centre[i], a, b);
          }
          const double h = (to - from) / double(cells);
          steps[i] = h;
          for (std::size_t c = 0; c <= cells; ++c) {
            x[m[i]] = c == cells ? to : from + h * double(c);
            enumerate(i + 1, remaining - x[m[i]], cells, centre, half);
            if (h == 0.0) break;
          }
        };

    const bool fine_grid = k == 3 && !coarse;
    const std::size_t cells = fine_grid ? opt_.grid_points : opt_.grid_points_high;
    enumerate(0, mu, cells, nullptr, nullptr);

    if (fine_grid) {
      std::vector<std::size_t> idx(values.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      const std::size_t n_seeds = std::min(opt_.candidates, idx.size());
      std::partial_sort(idx.begin(), idx.begin() + n_seeds, idx.end(), [&](std::size_t i, std::size_t j) {
        return values[i] > values[j] || (values[i] == values[j] && i < j);
      });
      const std::size_t fine = opt_.refine_factor;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        std::size_t current = idx[s];
        std::vector<double> half(spacing.begin() + current * k, spacing.begin() + (current + 1) * k);
        for (std::size_t round = 0; round < opt_.refine_rounds; ++round) {
          const std::vector<double> centre(coord(current).begin(), coord(current).end());
          const std::size_t before = values.size();
          enumerate(0, mu, 2 * fine, centre.data(), half.data());
          for (std::size_t i = before; i < values.size(); ++i) {
            if (values[i] > values[current]) current = i;
          }
          for (auto& h : half) h /= double(fine);
        }
      }
    }

    Result res;
    double best = -std::numeric_limits<double>::infinity();
    for (double val : values) best = std::max(best, val);
    res.value = std::max(best, 0.0);
    if (want_x) {
      const double eps = tie_eps(best);
      std::optional<std::size_t> chosen;
      for (std::size_t p = 0; p < values.size(); ++p) {
        if (values[p] < best - eps) continue;
        if (!chosen || std::lexicographical_compare(coord(p).begin(), coord(p).end(), coord(*chosen).begin(),
                                                    coord(*chosen).end())) {
          chosen = p;
        }
      }
      res.x.assign(degree, 0.0);
      for (std::size_t j = 0; j < k; ++j) res.x[m[j]] = coord(*chosen)[j];
    }
    return res;
  }

  void build_curve(NodeId v) {
    const LocalMask J = masks_[v];
    if (J == 0) {
      curves_[v] = PwlFunction::zero();
      return;
    }
    double total = 0.0;
    std::vector<double> kinks;
    const auto m = members(J);
    auto out = net_.out_links(v);
    for (std::size_t i : m) {
      const double c = caps_[out[i]];
      total += c;
      kinks.push_back(c);
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = i + 1; j < m.size(); ++j) {
        kinks.push_back(caps_[out[m[i]]] + caps_[out[m[j]]]);
        kinks.push_back(std::abs(caps_[out[m[i]]] - caps_[out[m[j]]]));
      }
    }
    const bool exact = m.size() <= 2;
    if (exact) {
      for (std::size_t i : m) {
        const auto& head = curves_[net_.link(out[i]).head];
        if (!head.is_infinite()) kinks.insert(kinks.end(), head.xs().begin(), head.xs().end());
      }
    }
    PwlFunction::SampleOptions so;
    so.base_points = exact ? opt_.curve_points : opt_.curve_points_grid;
    so.tol = exact ? opt_.curve_tol : opt_.curve_tol_grid;
    so.max_depth = exact ? opt_.curve_depth : opt_.curve_depth_grid;
    curves_[v] = PwlFunction::sample([&](double mu) { return value(v, J, {}, mu); }, total, kinks, so);
  }

  FlowNetwork net_;
  BpaOptions opt_;
  std::vector<char> active_;
  std::vector<double> caps_;
  std::vector<LocalMask> masks_;
  std::vector<PwlFunction> curves_;
  bool bound_only_ = false;

  mutable std::mutex mutex_;
  mutable std::map<std::tuple<NodeId, std::size_t, std::size_t, double>, PairSolution> pair_cache_;
};

using OraclePtr = std::shared_ptr<const ResilienceOracle>;

inline OraclePtr bpa_compute(const FlowNetwork& net, const BpaOptions& opt = {}) {
  return std::make_shared<ResilienceOracle>(net, opt);
}

/// g(J, r, μ): one maximiser (throws EmptyFeasibleSet).
inline std::vector<double> bpa_g(const ResilienceOracle& oracle, NodeId v, LocalMask J, std::span<const double> r,
                                 double mu) {
  return oracle.argmax(v, J, r, mu);
}

// ---------------------------------------------------------------------------
// BPA routing

/// Full-set split r* = g(E_v^+, 0, μ); strict subsets use g(J, r*, μ).
/// When μ exceeds the capacity of the active set the node cannot avoid an
/// overload; `split` then spreads μ in proportion to capacity (the node dies
/// on the next step) while `checked_split` reports InfeasibleSplit.
class BpaPolicy final : public RoutingPolicy {
 public:
  explicit BpaPolicy(OraclePtr oracle) : oracle_(std::move(oracle)) {}

  PolicyKind kind() const override { return PolicyKind::Bpa; }
  const ResilienceOracle& oracle() const { return *oracle_; }
  OraclePtr oracle_ptr() const { return oracle_; }

  std::vector<double> split(NodeId v, LocalMask active, double mu) const override {
    return compute(v, active, mu, false);
  }

  std::vector<double> checked_split(NodeId v, LocalMask active, double mu) const {
    return compute(v, active, mu, true);
  }

  /// r* at inflow μ.
  std::vector<double> full_split(NodeId v, double mu) const {
    return compute(v, oracle_->active_mask(v), mu, false);
  }

 private:
  std::vector<double> proportional(NodeId v, LocalMask J, double mu) const {
    const std::size_t degree = oracle_->network().out_links(v).size();
    std::vector<double> x(degree, 0.0);
    double total = 0.0;
    for (std::size_t i : members(J)) total += oracle_->local_capacity(v, i);
    for (std::size_t i : members(J)) x[i] = oracle_->local_capacity(v, i) / total * mu;
    return x;
  }

  std::vector<double> compute(NodeId v, LocalMask J, double mu, bool strict) const {
    const auto key = std::make_tuple(v, J, mu);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = memo_.find(key);
      if (it != memo_.end()) {
        if (strict && !it->second.second) throw infeasible(v, mu);
        return it->second.first;
      }
    }
    const LocalMask full = oracle_->active_mask(v);
    std::vector<double> x;
    bool ok = true;
    if (J == full) {
      ok = oracle_->feasible(v, J, {}, mu);
      x = ok ? oracle_->argmax(v, J, {}, mu) : proportional(v, J, mu);
    } else {
      auto r = compute(v, full, mu, false);
      ok = oracle_->feasible(v, J, r, mu);
      x = ok ? oracle_->argmax(v, J, r, mu) : proportional(v, J, mu);
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (memo_.size() > 500000) memo_.clear();
      memo_.emplace(key, std::make_pair(x, ok));
    }
    if (strict && !ok) throw infeasible(v, mu);
    return x;
  }

  static CascadeError infeasible(NodeId v, double mu) {
    return CascadeError(ErrorCode::InfeasibleSplit,
                        "inflow " + std::to_string(mu) + " exceeds the capacity available at node " + std::to_string(v));
  }

  OraclePtr oracle_;
  mutable std::mutex mutex_;
  mutable std::map<std::tuple<NodeId, LocalMask, double>, std::pair<std::vector<double>, bool>> memo_;
};

inline std::shared_ptr<const BpaPolicy> bpa_policy(OraclePtr oracle) {
  return std::make_shared<BpaPolicy>(std::move(oracle));
}

// ---------------------------------------------------------------------------
// Equilibrium flows X(J, λ)

/// {x >= 0 on J : x_e < C_e, conservation at every non-destination node,
/// origin outflow λ}, kept as constraints plus an interior sampler.
class EquilibriumSet {
 public:
  EquilibriumSet(const FlowNetwork& net, std::vector<char> active, double lambda)
      : net_(net), active_(std::move(active)), lambda_(lambda) {
    if (active_.empty()) active_.assign(net.link_count(), 1);
    for (LinkIndex e = 0; e < net.link_count(); ++e) {
      if (active_[e]) vars_.push_back(e);
    }
    auto p = base_problem(1);
    p.objective.assign(vars_.size() + 1, 0.0);
    p.objective.back() = 1.0;
    auto sol = lp::solve(p);
    if (sol.status == lp::Status::Optimal && sol.value > 1e-9) {
      nonempty_ = true;
      slack_ = sol.value;
      centre_ = expand(sol.x);
    }
  }

  bool empty() const { return !nonempty_; }
  /// Largest uniform capacity slack over the set (0 when empty).
  double max_slack() const { return slack_; }
  const std::vector<double>& centre() const { return centre_; }

  /// Strict membership test.
  bool contains(const std::vector<double>& f, double tol = 1e-9) const {
    std::vector<double> in(net_.node_count(), 0.0);
    in[net_.origin()] = lambda_;
    for (LinkIndex e = 0; e < net_.link_count(); ++e) {
      if (!active_[e]) {
        if (f[e] != 0.0) return false;
        continue;
      }
      if (f[e] < -tol || !(f[e] < net_.capacity(e))) return false;
      in[net_.link(e).head] += f[e];
    }
    for (NodeId v = 0; v < net_.destination(); ++v) {
      double out = 0.0;
      for (LinkIndex e : net_.out_links(v)) {
        if (active_[e]) out += f[e];
      }
      if (std::abs(out - in[v]) > tol * std::max(1.0, lambda_)) return false;
    }
    return true;
  }

  /// Random point strictly inside: a convex combination of the max-slack
  /// centre (positive weight) and random vertices of the closure.
  template <typename Rng>
  std::vector<double> sample(Rng& rng) const {
    if (!nonempty_) throw CascadeError(ErrorCode::EmptyFeasibleSet, "no equilibrium flow exists");
    std::uniform_real_distribution<double> u(0.0, 1.0), c(-1.0, 1.0);
    auto p = base_problem(0);
    p.objective.resize(vars_.size() + 1, 0.0);
    for (std::size_t i = 0; i < vars_.size(); ++i) p.objective[i] = c(rng);
    auto sol = lp::solve(p);
    std::vector<double> vertex = sol.status == lp::Status::Optimal ? expand(sol.x) : centre_;
    const double w = 0.05 + 0.95 * u(rng);
    std::vector<double> f(net_.link_count(), 0.0);
    for (LinkIndex e = 0; e < net_.link_count(); ++e) f[e] = w * centre_[e] + (1 - w) * vertex[e];
    return f;
  }

 private:
  // Variables: one per active link, then t (uniform slack). With
  // `with_slack`, x_e + t <= C_e; otherwise t is fixed to 0.
  lp::Problem base_problem(int with_slack) const {
    lp::Problem p;
    p.variables = vars_.size() + 1;
    const std::size_t t = vars_.size();
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      std::vector<double> row(p.variables, 0.0);
      row[i] = 1.0;
      row[t] = with_slack;
      p.add(row, lp::Sense::LessEq, net_.capacity(vars_[i]));
    }
    if (!with_slack) {
      std::vector<double> row(p.variables, 0.0);
      row[t] = 1.0;
      p.add(row, lp::Sense::Equal, 0.0);
    }
    for (NodeId v = 0; v < net_.destination(); ++v) {
      std::vector<double> row(p.variables, 0.0);
      bool any = false;
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        const auto& l = net_.link(vars_[i]);
        if (l.tail == v) row[i] += 1.0, any = true;
        if (l.head == v) row[i] -= 1.0, any = true;
      }
      const double rhs = v == net_.origin() ? lambda_ : 0.0;
      if (any || rhs != 0.0) p.add(row, lp::Sense::Equal, rhs);
    }
    return p;
  }

  std::vector<double> expand(const std::vector<double>& x) const {
    std::vector<double> f(net_.link_count(), 0.0);
    for (std::size_t i = 0; i < vars_.size(); ++i) f[vars_[i]] = std::max(0.0, x[i]);
    return f;
  }

  const FlowNetwork& net_;
  std::vector<char> active_;
  double lambda_;
  std::vector<LinkIndex> vars_;
  bool nonempty_ = false;
  double slack_ = 0.0;
  std::vector<double> centre_;
};

}  // namespace cascade
