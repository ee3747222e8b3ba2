#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

// Log-log rate fit: estimates the exponent gamma in value ~ C / T^gamma
// from (T, value) pairs by ordinary least squares on (log T, log value).

namespace fou2 {

struct RateFit {
  std::vector<std::pair<double, double>> pairs;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
};

inline RateFit rate_regression(
    const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3)
    throw std::invalid_argument("rate_regression: need at least 3 pairs");
  const auto n = static_cast<double>(pairs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& [t, v] : pairs) {
    if (!(t > 0.0) || !(v > 0.0))
      throw std::invalid_argument(
          "rate_regression: pairs must be strictly positive");
    const double x = std::log(t), y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double vxx = sxx - sx * sx / n;
  const double vxy = sxy - sx * sy / n;
  const double vyy = syy - sy * sy / n;
  if (!(vxx > 0.0))
    throw std::invalid_argument("rate_regression: T values must not coincide");
  RateFit fit;
  fit.pairs = pairs;
  fit.slope = vxy / vxx;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.r_squared = (vyy > 0.0) ? (vxy * vxy) / (vxx * vyy) : 1.0;
  return fit;
}

}  // namespace fou2
