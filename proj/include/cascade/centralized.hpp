#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "cascade/cuts.hpp"
#include "cascade/error.hpp"
#include "cascade/lp.hpp"
#include "cascade/network.hpp"

namespace cascade {

inline constexpr std::size_t kMaxCentralizedLinks = 20;

/// S(J, λ) for every subset J of links (bit e of the mask = link e).
struct CentralizedTable {
  std::vector<double> value;   // indexed by link mask
  std::vector<char> feasible;  // X(J, λ) non-empty
  double worst_monotonicity_violation = 0.0;  // max over K ⊂ J of S(K) - S(J)

  double at(std::uint32_t mask) const { return value[mask]; }
  double full() const { return value.back(); }
};

namespace detail {

// max z  s.t.  z + x_e <= C_e + S(J \ e)  (e ∈ J),  0 <= x_e <= C_e,
//              conservation at every internal node, outflow λ at the origin.
inline double centralized_lp(const FlowNetwork& net, std::uint32_t mask, const std::vector<double>& table) {
  std::vector<LinkIndex> links;
  for (LinkIndex e = 0; e < net.link_count(); ++e) {
    if (mask >> e & 1u) links.push_back(e);
  }
  lp::Problem p;
  p.variables = links.size() + 1;
  const std::size_t z = links.size();
  p.objective.assign(p.variables, 0.0);
  p.objective[z] = 1.0;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const LinkIndex e = links[i];
    std::vector<double> row(p.variables, 0.0);
    row[i] = 1.0;
    row[z] = 1.0;
    p.add(row, lp::Sense::LessEq, net.capacity(e) + table[mask & ~(1u << e)]);
    std::vector<double> bound(p.variables, 0.0);
    bound[i] = 1.0;
    p.add(bound, lp::Sense::LessEq, net.capacity(e));
  }
  for (NodeId v = 0; v < net.destination(); ++v) {
    std::vector<double> row(p.variables, 0.0);
    bool any = false;
    for (std::size_t i = 0; i < links.size(); ++i) {
      const auto& l = net.link(links[i]);
      if (l.tail == v) row[i] += 1.0, any = true;
      if (l.head == v) row[i] -= 1.0, any = true;
    }
    const double rhs = v == net.origin() ? net.inflow() : 0.0;
    if (any || rhs != 0.0) p.add(row, lp::Sense::Equal, rhs);
  }
  auto sol = lp::solve(p);
  if (sol.status != lp::Status::Optimal) return 0.0;
  return std::max(sol.value, 0.0);
}

}  // namespace detail

/// Centralized recursion over all link subsets in increasing order; each
/// feasible subset is one epigraph LP. Throws TooManyLinks beyond 20 links.
inline CentralizedTable centralized_recursion(const FlowNetwork& net) {
  const std::size_t m = net.link_count();
  if (m > kMaxCentralizedLinks) {
    throw CascadeError(ErrorCode::TooManyLinks, std::to_string(m) + " links exceed the centralized limit of " +
                                                     std::to_string(kMaxCentralizedLinks));
  }
  const std::uint32_t count = 1u << m;
  CentralizedTable t;
  t.value.assign(count, 0.0);
  t.feasible.assign(count, 0);
  const auto caps = net.capacities();
  std::vector<char> active(m, 0);
  for (std::uint32_t mask = 1; mask < count; ++mask) {
    for (std::size_t e = 0; e < m; ++e) active[e] = static_cast<char>(mask >> e & 1u);
    if (!strictly_exceeds(max_flow(net, caps, active).value, net.inflow())) continue;
    t.feasible[mask] = 1;
    t.value[mask] = detail::centralized_lp(net, mask, t.value);
    for (std::size_t e = 0; e < m; ++e) {
      if (mask >> e & 1u) {
        t.worst_monotonicity_violation =
            std::max(t.worst_monotonicity_violation, t.value[mask & ~(1u << e)] - t.value[mask]);
      }
    }
  }
  return t;
}

/// S(E, λ).
inline double centralized_upper_bound(const FlowNetwork& net) { return centralized_recursion(net).full(); }

}  // namespace cascade
