#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "cascade/error.hpp"

namespace cascade {

/// Piecewise-linear function on [0, domain_max()], extended by 0 to the
/// right. A distinguished instance represents the constant +∞.
class PwlFunction {
 public:
  PwlFunction() = default;

  PwlFunction(std::vector<double> xs, std::vector<double> ys) : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.size() != ys_.size() || xs_.empty()) {
      throw CascadeError(ErrorCode::SchemaError, "breakpoint lists must be non-empty and of equal length");
    }
    for (std::size_t i = 1; i < xs_.size(); ++i) {
      if (!(xs_[i] > xs_[i - 1])) throw CascadeError(ErrorCode::SchemaError, "breakpoints must strictly increase");
    }
  }

  static PwlFunction infinite() {
    PwlFunction f;
    f.infinite_ = true;
    return f;
  }

  static PwlFunction zero() { return PwlFunction({0.0}, {0.0}); }

  bool is_infinite() const { return infinite_; }
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  double domain_max() const { return infinite_ ? std::numeric_limits<double>::infinity() : xs_.back(); }

  double operator()(double mu) const {
    if (infinite_) return std::numeric_limits<double>::infinity();
    if (mu <= xs_.front()) return ys_.front();
    if (mu > xs_.back()) return 0.0;
    auto it = std::upper_bound(xs_.begin(), xs_.end(), mu);
    if (it == xs_.end()) return ys_.back();
    const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
    const double w = (mu - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    return ys_[i - 1] + w * (ys_[i] - ys_[i - 1]);
  }

  /// Largest increase between consecutive breakpoints (0 for nonincreasing).
  double max_increase() const {
    double worst = 0.0;
    for (std::size_t i = 1; i < ys_.size(); ++i) worst = std::max(worst, ys_[i] - ys_[i - 1]);
    return worst;
  }

  double min_value() const { return infinite_ ? 0.0 : *std::min_element(ys_.begin(), ys_.end()); }

  /// Γ = sup{μ : f(μ) > 0}, the effective capacity of a value curve.
  double support_end(double eps = 1e-12) const {
    if (infinite_) return std::numeric_limits<double>::infinity();
    for (std::size_t i = ys_.size(); i-- > 0;) {
      if (ys_[i] > eps) {
        if (i + 1 < ys_.size() && ys_[i] != ys_[i + 1]) {
          return xs_[i] + (ys_[i] - eps) / (ys_[i] - ys_[i + 1]) * (xs_[i + 1] - xs_[i]);
        }
        return xs_[i];
      }
    }
    return 0.0;
  }

  struct SampleOptions {
    std::size_t base_points = 401;
    double tol = 1e-10;
    std::size_t max_depth = 30;
    double min_width = 1e-9;
  };

  /// Samples `f` on [0, hi]: a uniform base grid merged with `kinks`, then
  /// bisection wherever midpoint or quarter points deviate from the chord.
  static PwlFunction sample(const std::function<double(double)>& f, double hi, std::vector<double> kinks,
                            const SampleOptions& opt) {
    if (!(hi > 0.0)) return PwlFunction({0.0}, {f(0.0)});
    std::vector<double> grid;
    const std::size_t n = std::max<std::size_t>(opt.base_points, 2);
    for (std::size_t i = 0; i < n; ++i) grid.push_back(hi * double(i) / double(n - 1));
    for (double k : kinks) {
      if (k > 0.0 && k < hi) grid.push_back(k);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(), [&](double a, double b) { return b - a < opt.min_width; }),
               grid.end());
    grid.back() = hi;

    std::vector<double> xs, ys;
    const double width_floor = opt.min_width * std::max(1.0, hi);
    std::function<void(double, double, double, double, std::size_t)> refine = [&](double a, double fa, double b,
                                                                                  double fb, std::size_t depth) {
      if (depth < opt.max_depth && b - a > width_floor) {
        const double m = 0.5 * (a + b), q1 = 0.5 * (a + m), q3 = 0.5 * (m + b);
        const double fm = f(m), f1 = f(q1), f3 = f(q3);
        auto chord = [&](double x) { return fa + (fb - fa) * (x - a) / (b - a); };
        if (std::abs(fm - chord(m)) > opt.tol || std::abs(f1 - chord(q1)) > opt.tol ||
            std::abs(f3 - chord(q3)) > opt.tol) {
          refine(a, fa, m, fm, depth + 1);
          xs.push_back(m);
          ys.push_back(fm);
          refine(m, fm, b, fb, depth + 1);
        }
      }
    };
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = f(grid[i]);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      xs.push_back(grid[i]);
      ys.push_back(values[i]);
      if (i + 1 < grid.size()) refine(grid[i], values[i], grid[i + 1], values[i + 1], 0);
    }
    return simplify(std::move(xs), std::move(ys));
  }

 private:
  static PwlFunction simplify(std::vector<double> xs, std::vector<double> ys) {
    std::vector<double> ox{xs.front()}, oy{ys.front()};
    for (std::size_t i = 1; i < xs.size(); ++i) {
      if (i + 1 < xs.size()) {
        const double a = ox.back(), fa = oy.back(), b = xs[i + 1], fb = ys[i + 1];
        const double chord = fa + (fb - fa) * (xs[i] - a) / (b - a);
        if (std::abs(chord - ys[i]) <= 1e-13 * std::max(1.0, std::abs(ys[i]))) continue;
      }
      ox.push_back(xs[i]);
      oy.push_back(ys[i]);
    }
    return PwlFunction(std::move(ox), std::move(oy));
  }

  std::vector<double> xs_, ys_;
  bool infinite_ = false;
};

}  // namespace cascade
