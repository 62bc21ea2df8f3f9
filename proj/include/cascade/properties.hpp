#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cascade/resilience.hpp"

namespace cascade {

enum class SProperty { Mu, R, Capacity, Links, DeadLink, Split };

inline const char* to_string(SProperty p) {
  switch (p) {
    case SProperty::Mu: return "nonincreasing-in-mu";
    case SProperty::R: return "nonincreasing-in-r";
    case SProperty::Capacity: return "nondecreasing-in-capacity";
    case SProperty::Links: return "nondecreasing-in-links";
    case SProperty::DeadLink: return "dead-link-removal";
    case SProperty::Split: return "split-bound";
  }
  return "unknown";
}

struct PropertyFailure {
  SProperty property;
  std::size_t trial = 0;
  NodeId node = 0;
  LocalMask set = 0;
  double mu = 0.0;
  double lhs = 0.0;  // must not exceed rhs (+ tolerance); equality checks report both sides
  double rhs = 0.0;
};

struct PropertyReport {
  std::uint64_t seed = 0;
  std::size_t assertions = 0;
  std::size_t skipped = 0;  // draws where the property is vacuous (e.g. no feasible split)
  double tolerance = 0.0;
  std::vector<PropertyFailure> failures;

  bool passed() const { return failures.empty(); }
};

/// Tolerance for comparing oracle values: tight where every value is solved
/// exactly, a fraction of the largest local capacity where some node needs
/// the grid search.
inline double grid_tolerance(const ResilienceOracle& oracle) {
  const auto& net = oracle.network();
  double scale = 1.0;
  bool grid = false;
  for (NodeId v = 0; v < net.destination(); ++v) {
    double sum = 0.0;
    for (std::size_t i : members(oracle.active_mask(v))) sum += oracle.local_capacity(v, i);
    scale = std::max(scale, sum);
    if (popcount(oracle.active_mask(v)) >= 3) grid = true;
  }
  return (grid ? 2e-3 : 1e-7) * scale;
}

/// Randomized checks of the monotonicity properties of S (in μ, r,
/// capacities and links), the dead-link identity and the split bound.
/// The capacity and link comparisons use copies of the oracle's network
/// with capacities scaled down, or with one link removed. Each trial is
/// reproducible from (seed, trial index).
inline PropertyReport check_s_properties(const ResilienceOracle& oracle, std::size_t trials, std::uint64_t seed = 1) {
  const auto& net = oracle.network();
  PropertyReport report;
  report.seed = seed;
  std::mt19937_64 setup(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> reduced = oracle.capacities();
  for (auto& c : reduced) c *= 0.6 + 0.4 * unit(setup);
  ResilienceOracle smaller_caps(net, oracle.options(), oracle.active_links(), reduced);
  std::vector<char> fewer = oracle.active_links();
  {
    std::vector<LinkIndex> act;
    for (LinkIndex e = 0; e < net.link_count(); ++e) {
      if (fewer[e]) act.push_back(e);
    }
    if (!act.empty()) fewer[act[std::uniform_int_distribution<std::size_t>(0, act.size() - 1)(setup)]] = 0;
  }
  ResilienceOracle fewer_links(net, oracle.options(), fewer, oracle.capacities());
  report.tolerance = std::max({grid_tolerance(oracle), grid_tolerance(smaller_caps), grid_tolerance(fewer_links)});
  const double tol = report.tolerance;

  std::vector<NodeId> nodes;
  for (NodeId v = 0; v < net.destination(); ++v) {
    if (oracle.active_mask(v) != 0) nodes.push_back(v);
  }
  if (nodes.empty()) return report;

  constexpr SProperty kinds[] = {SProperty::Mu,       SProperty::R,        SProperty::Capacity,
                                 SProperty::Links,    SProperty::DeadLink, SProperty::Split};
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(seed * 1000003u + trial);
    const SProperty kind = kinds[trial % 6];
    const NodeId v = nodes[std::uniform_int_distribution<std::size_t>(0, nodes.size() - 1)(rng)];
    const std::size_t degree = net.out_links(v).size();
    LocalMask full = oracle.active_mask(v);
    if (kind == SProperty::Links) full &= fewer_links.active_mask(v);
    if (full == 0) {
      ++report.skipped;
      continue;
    }
    LocalMask J = 0;
    while (J == 0) {
      for (std::size_t i : members(full)) {
        if (unit(rng) < 0.6) J |= single(i);
      }
    }
    double cap_sum = 0.0;
    for (std::size_t i : members(J)) cap_sum += oracle.local_capacity(v, i);
    const double mu = unit(rng) * cap_sum;
    // r: random lower bounds with Σ r <= μ
    std::vector<double> r(degree, 0.0);
    {
      const double share = unit(rng) * mu;
      std::vector<double> w(degree, 0.0);
      double total = 0.0;
      for (std::size_t i : members(J)) total += (w[i] = unit(rng));
      for (std::size_t i : members(J)) r[i] = std::min(oracle.local_capacity(v, i), share * w[i] / total);
    }
    auto fail = [&](double lhs, double rhs) { report.failures.push_back({kind, trial, v, J, mu, lhs, rhs}); };
    ++report.assertions;
    switch (kind) {
      case SProperty::Mu: {
        double rs = 0.0;
        for (double x : r) rs += x;
        const double mu2 = rs + unit(rng) * (mu - rs);
        const double a = oracle.value(v, J, r, mu), b = oracle.value(v, J, r, mu2);
        if (a > b + tol) fail(a, b);
        break;
      }
      case SProperty::R: {
        std::vector<double> r2 = r;
        for (auto& x : r2) x *= unit(rng);
        const double a = oracle.value(v, J, r, mu), b = oracle.value(v, J, r2, mu);
        if (a > b + tol) fail(a, b);
        break;
      }
      case SProperty::Capacity: {
        const double a = smaller_caps.value(v, J, r, mu), b = oracle.value(v, J, r, mu);
        if (a > b + tol) fail(a, b);
        break;
      }
      case SProperty::Links: {
        const double a = fewer_links.value(v, J, r, mu), b = oracle.value(v, J, r, mu);
        if (a > b + tol) fail(a, b);
        break;
      }
      case SProperty::DeadLink: {
        // push some lower bounds past the link's effective capacity
        std::vector<double> rd(degree, 0.0);
        double rs = 0.0;
        for (std::size_t i : members(J)) {
          const LinkIndex e = net.out_links(v)[i];
          const double c = oracle.local_capacity(v, i);
          const auto& head = oracle.node_curve(net.link(e).head);
          const double gamma = std::min(c, head.support_end());
          rd[i] = unit(rng) < 0.5 ? gamma + unit(rng) * (c - gamma) : unit(rng) * gamma;
          rs += rd[i];
        }
        const double m = rs + unit(rng) * std::max(0.0, cap_sum - rs);
        LocalMask K = 0;
        for (std::size_t i : members(J)) {
          if (oracle.local_link_value(v, i, rd[i]) > 0.0) K |= single(i);
        }
        const double a = oracle.value(v, K, rd, m), b = oracle.value(v, J, rd, m);
        if (std::abs(a - b) > tol) report.failures.push_back({kind, trial, v, J, m, a, b});
        break;
      }
      case SProperty::Split: {
        if (!oracle.feasible(v, J, r, mu)) {
          --report.assertions;
          ++report.skipped;
          break;
        }
        const auto x = oracle.argmax(v, J, r, mu);
        LocalMask K = 0;
        while (K == 0) {
          for (std::size_t i : members(J)) {
            if (unit(rng) < 0.5) K |= single(i);
          }
        }
        double rhs = oracle.value(v, J & ~K, x, mu);
        for (std::size_t i : members(K)) rhs += oracle.local_link_value(v, i, x[i]);
        const double lhs = oracle.value(v, J, r, mu);
        if (lhs > rhs + tol) fail(lhs, rhs);
        break;
      }
    }
  }
  return report;
}

}  // namespace cascade
