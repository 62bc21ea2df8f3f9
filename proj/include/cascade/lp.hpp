#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace cascade::lp {

enum class Sense { LessEq, Equal, GreaterEq };
enum class Status { Optimal, Infeasible, Unbounded };

struct Constraint {
  std::vector<double> coefficients;
  Sense sense = Sense::LessEq;
  double rhs = 0.0;
};

/// maximize objective·x subject to the constraints and x >= 0.
struct Problem {
  std::size_t variables = 0;
  std::vector<double> objective;
  std::vector<Constraint> constraints;

  void add(std::vector<double> coefficients, Sense sense, double rhs) {
    coefficients.resize(variables, 0.0);
    constraints.push_back({std::move(coefficients), sense, rhs});
  }
};

struct Solution {
  Status status = Status::Infeasible;
  double value = 0.0;
  std::vector<double> x;
};

namespace detail {

// Dense tableau. Row 0..m-1 are constraints, column `cols` is the rhs.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * (cols + 1), 0.0), basis_(rows, 0) {}

  double& at(std::size_t r, std::size_t c) { return a_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return a_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  std::size_t& basis(std::size_t r) { return basis_[r]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double p = at(pr, pc);
    for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) /= p;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
    }
    basis_[pr] = pc;
  }

  // Maximise cost·x over columns with allowed[c]; Bland's rule.
  // Returns false when unbounded.
  bool optimise(const std::vector<double>& cost, const std::vector<char>& allowed, double eps) {
    for (;;) {
      // reduced cost d_c = cost_c - Σ_r cost_{basis r} a_{r c}
      std::size_t enter = cols_;
      for (std::size_t c = 0; c < cols_ && enter == cols_; ++c) {
        if (!allowed[c]) continue;
        double d = cost[c];
        for (std::size_t r = 0; r < rows_; ++r) d -= cost[basis_[r]] * at(r, c);
        if (d > eps) enter = c;
      }
      if (enter == cols_) return true;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        if (at(r, enter) > eps) best = std::min(best, rhs(r) / at(r, enter));
      }
      if (!std::isfinite(best)) return false;
      std::size_t leave = rows_;
      for (std::size_t r = 0; r < rows_; ++r) {
        if (at(r, enter) > eps && rhs(r) / at(r, enter) <= best + eps &&
            (leave == rows_ || basis_[r] < basis_[leave])) {
          leave = r;
        }
      }
      pivot(leave, enter);
    }
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> a_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

/// Two-phase dense simplex with Bland's anti-cycling rule. Intended for the
/// small programs that arise on desk-scale networks (tens of variables).
inline Solution solve(const Problem& problem, double eps = 1e-10) {
  const std::size_t n = problem.variables;
  const std::size_t m = problem.constraints.size();

  // Column layout: structural | slack/surplus (one per inequality) | artificial (one per row needing it).
  std::size_t slack_count = 0, art_count = 0;
  std::vector<Sense> sense(m);
  std::vector<double> sign(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& c = problem.constraints[i];
    sense[i] = c.sense;
    if (c.rhs < 0) {
      sign[i] = -1.0;
      if (c.sense == Sense::LessEq) sense[i] = Sense::GreaterEq;
      else if (c.sense == Sense::GreaterEq) sense[i] = Sense::LessEq;
    }
    if (sense[i] != Sense::Equal) ++slack_count;
    if (sense[i] != Sense::LessEq) ++art_count;
  }
  const std::size_t cols = n + slack_count + art_count;
  detail::Tableau t(m, cols);
  std::size_t next_slack = n, next_art = n + slack_count;
  std::vector<char> is_art(cols, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& c = problem.constraints[i];
    for (std::size_t j = 0; j < n; ++j) t.at(i, j) = sign[i] * c.coefficients[j];
    t.rhs(i) = sign[i] * c.rhs;
    if (sense[i] == Sense::LessEq) {
      t.at(i, next_slack) = 1.0;
      t.basis(i) = next_slack++;
    } else {
      if (sense[i] == Sense::GreaterEq) t.at(i, next_slack++) = -1.0;
      t.at(i, next_art) = 1.0;
      is_art[next_art] = 1;
      t.basis(i) = next_art++;
    }
  }

  Solution sol;
  std::vector<char> allowed(cols, 1);
  if (art_count > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c) {
      if (is_art[c]) phase1[c] = -1.0;
    }
    t.optimise(phase1, allowed, eps);
    double infeas = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      if (is_art[t.basis(r)]) infeas += t.rhs(r);
    }
    if (infeas > 1e-8) return sol;
    // Drive remaining (zero-level) artificials out of the basis where possible.
    for (std::size_t r = 0; r < m; ++r) {
      if (!is_art[t.basis(r)]) continue;
      for (std::size_t c = 0; c < cols; ++c) {
        if (!is_art[c] && std::abs(t.at(r, c)) > 1e-9) {
          t.pivot(r, c);
          break;
        }
      }
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (is_art[c]) allowed[c] = 0;
    }
  }

  std::vector<double> cost(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) cost[j] = j < problem.objective.size() ? problem.objective[j] : 0.0;
  if (!t.optimise(cost, allowed, eps)) {
    sol.status = Status::Unbounded;
    return sol;
  }
  sol.status = Status::Optimal;
  sol.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (t.basis(r) < n) sol.x[t.basis(r)] = t.rhs(r);
  }
  for (std::size_t j = 0; j < n; ++j) sol.value += cost[j] * sol.x[j];
  return sol;
}

}  // namespace cascade::lp
