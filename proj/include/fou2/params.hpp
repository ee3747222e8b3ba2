#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

// Shared parameter types and the error taxonomy for the second-kind
// fractional Ornstein-Uhlenbeck toolkit. Everything downstream is
// parameterized by ModelParams (drift alpha, Hurst index H) and a
// QuadratureSpec carrying the quadrature tolerances.

namespace fou2 {

struct ModelParams {
  double alpha;  // mean-reversion drift, > 0 (units 1/time)
  double hurst;  // Hurst index, open interval (1/2, 1)

  ModelParams(double alpha_, double hurst_) : alpha(alpha_), hurst(hurst_) {
    if (!std::isfinite(alpha) || alpha <= 0.0)
      throw std::invalid_argument("ModelParams: alpha must be finite and > 0");
    if (!std::isfinite(hurst) || hurst <= 0.5 || hurst >= 1.0)
      throw std::invalid_argument(
          "ModelParams: hurst must lie in the open interval (1/2, 1)");
  }
};

// Slowest exponential decay rate of the integrands on (0,inf) domains:
// min(alpha, 1/H - 1). Drives the certified truncation length.
inline double tail_decay_rate(const ModelParams& p) {
  return std::min(p.alpha, 1.0 / p.hurst - 1.0);
}

struct QuadratureSpec {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  int max_subdivisions = 12;       // doubling levels of the tanh-sinh rule
  double truncation_length = 0.0;  // cutoff for (0,inf) domains; 0 = derive

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw std::invalid_argument("QuadratureSpec: tolerances must be > 0");
    if (max_subdivisions < 4 || max_subdivisions > 15)
      throw std::invalid_argument(
          "QuadratureSpec: max_subdivisions must be in [4, 15]");
    if (truncation_length < 0.0 || !std::isfinite(truncation_length))
      throw std::invalid_argument(
          "QuadratureSpec: truncation_length must be finite and >= 0");
  }
};

// Smallest L with exp(-tail_decay_rate * L) comfortably below abs_tol.
inline double default_truncation(const ModelParams& p, double abs_tol) {
  return (-std::log(abs_tol) + 5.0) / tail_decay_rate(p);
}

inline QuadratureSpec default_quadrature(const ModelParams& p) {
  QuadratureSpec q;
  q.truncation_length = default_truncation(p, q.abs_tol);
  return q;
}

// Adaptive quadrature failed to reach tolerance; carries the last two
// level estimates so the caller can judge how bad the stall is.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double last, double previous)
      : std::runtime_error(what),
        last_estimate(last),
        previous_estimate(previous) {}
  double last_estimate;
  double previous_estimate;
};

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& what, double pivot)
      : std::runtime_error(what), min_pivot(pivot) {}
  double min_pivot;  // most negative pivot seen
};

class DegenerateSampleError : public std::runtime_error {
 public:
  DegenerateSampleError(const std::string& what, std::int64_t index)
      : std::runtime_error(what), sample_index(index) {}
  std::int64_t sample_index;
};

}  // namespace fou2
