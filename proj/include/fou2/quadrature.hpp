#pragma once

#include <cmath>
#include <vector>

#include "fou2/params.hpp"

// Double-exponential (tanh-sinh) quadrature on a finite interval. The rule
// places nodes that crowd the endpoints double-exponentially, so integrable
// power-law endpoint singularities u^g, g > -1, converge at full speed
// without any problem-specific change of variables. All interior
// singularities must be split into endpoint singularities by the caller.

namespace fou2 {

struct QuadResult {
  double value = 0.0;
  double previous = 0.0;  // estimate one level coarser
  double error = 0.0;     // |value - previous|
  int levels = 0;
  bool converged = false;
};

namespace detail {

struct TsNode {
  double t;  // abscissa parameter
  double r;  // distance of the node to the endpoint, unit interval scale
  double w;  // weight factor
};

// Node tables per doubling level, built once. r(t) = 1 - tanh((pi/2) sinh t)
// is computed from exp(-2u) so it stays exact down to the underflow edge.
inline const std::vector<std::vector<TsNode>>& tanh_sinh_tables() {
  static const std::vector<std::vector<TsNode>> tables = [] {
    constexpr int kMaxLevel = 15;
    constexpr double kTMax = 6.5;
    const double half_pi = std::acos(-1.0) / 2.0;
    std::vector<std::vector<TsNode>> tabs(kMaxLevel + 1);
    for (int m = 0; m <= kMaxLevel; ++m) {
      const double h = std::ldexp(1.0, -m);
      const int step = (m == 0) ? 1 : 2;
      for (int k = (m == 0) ? 0 : 1;; k += step) {
        const double t = k * h;
        if (t > kTMax) break;
        const double u = half_pi * std::sinh(t);
        const double e2u = std::exp(-2.0 * u);
        const double r = 2.0 * e2u / (1.0 + e2u);
        const double cu = std::cosh(u);
        const double w = half_pi * std::cosh(t) / (cu * cu);
        if (r <= 0.0 || w <= 0.0 || !std::isfinite(w)) break;
        tabs[m].push_back({t, r, w});
      }
    }
    return tabs;
  }();
  return tables;
}

}  // namespace detail

// Integrate f over (a, b). f is invoked as f(x, x - a, b - x) where the two
// endpoint distances are computed without cancellation; integrands with
// endpoint singularities must use those instead of recomputing x - a. Nodes
// are never placed exactly on a or b. Non-finite integrand values are
// treated as zero (they can only occur where the weight already underflows).
template <typename F>
QuadResult tanh_sinh(F&& f, double a, double b, double rel_tol,
                     double abs_tol, int max_level = 12) {
  QuadResult res;
  if (!(b > a)) return res;  // empty or inverted interval integrates to zero
  const auto& tables = detail::tanh_sinh_tables();
  if (max_level >= static_cast<int>(tables.size()))
    max_level = static_cast<int>(tables.size()) - 1;

  const double s = 0.5 * (b - a);
  const double len = b - a;
  auto eval = [&](double r) -> double {
    const double d = s * r;  // distance to the nearer endpoint
    if (d <= 0.0) return 0.0;  // underflowed node, weight is negligible too
    double acc = 0.0;
    {  // node on the left half
      const double fx = f(a + d, d, len - d);
      if (std::isfinite(fx)) acc += fx;
    }
    if (r < 1.0) {  // its mirror image (t=0 maps both to the midpoint)
      const double fx = f(b - d, len - d, d);
      if (std::isfinite(fx)) acc += fx;
    }
    return acc;
  };

  double estimate = 0.0;
  double prev = 0.0;
  for (int m = 0; m <= max_level; ++m) {
    const double h = std::ldexp(1.0, -m);
    double sum = 0.0;
    for (const auto& node : tables[m]) sum += node.w * eval(node.r);
    prev = estimate;
    estimate = (m == 0) ? h * s * sum : 0.5 * estimate + h * s * sum;
    res.levels = m;
    if (m >= 2) {
      const double err = std::abs(estimate - prev);
      const double target = std::max(abs_tol, rel_tol * std::abs(estimate));
      if (err <= target) {
        res.converged = true;
        res.value = estimate;
        res.previous = prev;
        res.error = err;
        return res;
      }
    }
  }
  res.value = estimate;
  res.previous = prev;
  res.error = std::abs(estimate - prev);
  return res;
}

// Convenience wrapper for integrands that only need the abscissa.
template <typename F>
QuadResult tanh_sinh_plain(F&& f, double a, double b, double rel_tol,
                           double abs_tol, int max_level = 12) {
  return tanh_sinh([&](double x, double, double) { return f(x); }, a, b,
                   rel_tol, abs_tol, max_level);
}

}  // namespace fou2
