#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "fou2/params.hpp"
#include "fou2/quadrature.hpp"
#include "fou2/special.hpp"

// Closed-form kernels and the analytic constants of the drift estimation
// problem for the second-kind fractional Ornstein-Uhlenbeck process
//   dX_t = -alpha X_t dt + dY_t,  Y_t = int_0^t e^{-s} dB^H(a_s),
// with the time change a_t = H e^{t/H}. The driving noise has a stationary
// covariance density r(w,z) = phi(|w-z|) with an integrable |w-z|^{2H-2}
// singularity on the diagonal. This header computes:
//   - phi / r_kernel, the covariance density,
//   - rho = H^{2H}(2H-1)/alpha * B(H alpha + 1 - H, 2H - 1),
//   - sigma, the CLT normalization, via a triple integral over (0,inf)^3,
//   - b_T, the deterministic part of the normalized denominator.

namespace fou2 {

inline double time_change(double t, const ModelParams& p) {
  if (!(t >= 0.0))
    throw std::invalid_argument("time_change: t must be >= 0");
  return p.hurst * std::exp(t / p.hurst);
}

inline double inverse_time_change(double u, const ModelParams& p) {
  if (!std::isfinite(u) || u <= 0.0)
    throw std::domain_error("inverse_time_change: u must be finite and > 0");
  return p.hurst * std::log(u / p.hurst);
}

// Stationary profile phi(s) = r(w,z) at lag s = |w-z| > 0:
//   phi(s) = H^{2H-1}(2H-1) e^{-(1-H)s/H} (1 - e^{-s/H})^{2H-2}.
// Algebraically identical to the product form
//   H^{2H-1}(2H-1)(e^{w/H} e^{z/H})^{1-H} |e^{w/H}-e^{z/H}|^{2H-2}
// but free of the e^{w/H} overflow for large w, z.
inline double stationary_profile(double s, const ModelParams& p) {
  if (!(s > 0.0))
    throw std::domain_error("stationary_profile: lag must be > 0");
  const double H = p.hurst;
  return std::pow(H, 2.0 * H - 1.0) * (2.0 * H - 1.0) *
         std::exp(-(1.0 - H) * s / H) *
         std::pow(-std::expm1(-s / H), 2.0 * H - 2.0);
}

inline double r_kernel(double w, double z, const ModelParams& p) {
  if (!(w >= 0.0) || !(z >= 0.0))
    throw std::invalid_argument("r_kernel: arguments must be >= 0");
  if (w == z)
    throw std::domain_error(
        "r_kernel: diagonal w == z is singular; integrate across it");
  return stationary_profile(std::abs(w - z), p);
}

// Integrand of the sigma triple integral,
//   F(y1,y2,y3) = e^{-a|y1-y3|} e^{-a y2} e^{(1-1/H)(y1+y2+y3)}
//                 |e^{-y2/H}-e^{-y3/H}|^{2H-2} |1-e^{-y1/H}|^{2H-2},
// evaluated in log form so the near-singular factors neither overflow
// nor lose their leading digits.
inline double f_integrand(double y1, double y2, double y3,
                          const ModelParams& p) {
  if (!(y1 > 0.0) || !(y2 > 0.0) || !(y3 > 0.0))
    throw std::invalid_argument("f_integrand: all y must be > 0");
  if (y2 == y3)
    throw std::domain_error("f_integrand: y2 == y3 is singular");
  const double H = p.hurst;
  const double a = p.alpha;
  const double ex = 2.0 * H - 2.0;
  const double ymin = std::min(y2, y3);
  const double dd = std::abs(y2 - y3);
  double logF = -a * std::abs(y1 - y3) - a * y2 +
                (1.0 - 1.0 / H) * (y1 + y2 + y3);
  logF += ex * (-ymin / H + std::log(-std::expm1(-dd / H)));
  logF += ex * std::log(-std::expm1(-y1 / H));
  return std::exp(logF);
}

// rho = H^{2H}(2H-1)/alpha * B(H alpha + 1 - H, 2H - 1).
inline double rho_const(const ModelParams& p) {
  const double H = p.hurst;
  return std::pow(H, 2.0 * H) * (2.0 * H - 1.0) / p.alpha *
         beta_fn(H * p.alpha + 1.0 - H, 2.0 * H - 1.0);
}

struct ConstantsReport {
  double sigma = 0.0;
  double rho = 0.0;
  double triple_integral = 0.0;  // int_{(0,inf)^3} F
  double estimated_error = 0.0;  // quadrature + certified tail estimate
};

namespace detail {

// The substitution u_i = e^{-y_i/H} maps the triple integral to (0,1)^3:
//   int F dy = H^3 int (min/max)(u1,u3)^{Ha} u2^{Ha-H} (u1 u3)^{-H}
//                     |u2-u3|^{2H-2} (1-u1)^{2H-2} du,
// which factorizes into nested 1-d integrals: the u1 and u2 integrals
// depend on u3 only. All singularities are power laws sitting at panel
// endpoints, which is exactly what the tanh-sinh rule wants.
struct TripleIntegralScheme {
  double H, Ha, exs;  // exs = 2H-2
  double u_min;       // truncation image e^{-L/H}
  double rel, abs;
  int max_level;

  double u1_part(double u3) const {
    // int_{u_min}^1 u1^{-H} (1-u1)^{2H-2} (min/max)^{Ha} du1, split at u3
    const auto& lo = tanh_sinh(
        [&](double u, double fa, double tb) {
          (void)fa;
          // on (u_min, u3): (u1/u3)^{Ha} u1^{-H}; 1-u1 = (1-u3) + (u3-u1)
          const double one_minus = (1.0 - u3) + tb;
          return std::pow(u, Ha - H) * std::pow(one_minus, exs);
        },
        u_min, u3, rel, abs, max_level);
    const auto& hi = tanh_sinh(
        [&](double u, double fa, double tb) {
          (void)fa;
          return std::pow(u, -Ha - H) * std::pow(tb, exs);
        },
        u3, 1.0, rel, abs, max_level);
    return std::pow(u3, -Ha) * lo.value + std::pow(u3, Ha) * hi.value;
  }

  double u2_part(double u3) const {
    const auto& lo = tanh_sinh(
        [&](double u, double fa, double tb) {
          (void)fa;
          return std::pow(u, Ha - H) * std::pow(tb, exs);  // tb = u3 - u2
        },
        u_min, u3, rel, abs, max_level);
    const auto& hi = tanh_sinh(
        [&](double u, double fa, double tb) {
          (void)tb;
          return std::pow(u, Ha - H) * std::pow(fa, exs);  // fa = u2 - u3
        },
        u3, 1.0, rel, abs, max_level);
    return lo.value + hi.value;
  }
};

}  // namespace detail

// sigma = alpha/(H B(Ha+1-H, 2H-1)) sqrt(2 int F). The triple integral is
// evaluated on the unit cube after u = e^{-y/H}; the domain is cut at
// u_min = e^{-L/H} and the discarded tail is certified a priori against
// abs_tol through the decay rate min(alpha, 1/H - 1).
inline ConstantsReport sigma_const(const ModelParams& p,
                                   const QuadratureSpec& q) {
  q.validate();
  const double H = p.hurst;
  const double L = q.truncation_length > 0.0 ? q.truncation_length
                                             : default_truncation(p, q.abs_tol);
  const double tail_bound = std::exp(-tail_decay_rate(p) * L);
  if (!(tail_bound < q.abs_tol))
    throw std::invalid_argument(
        "sigma_const: truncation_length " + std::to_string(L) +
        " gives tail bound " + std::to_string(tail_bound) +
        " which is not below abs_tol");

  detail::TripleIntegralScheme sch;
  sch.H = H;
  sch.Ha = H * p.alpha;
  sch.exs = 2.0 * H - 2.0;
  sch.u_min = std::exp(-L / H);
  sch.rel = q.rel_tol * 0.02;
  sch.abs = q.abs_tol * 0.02;
  sch.max_level = q.max_subdivisions;

  const auto outer = tanh_sinh(
      [&](double u3, double fa, double tb) {
        (void)fa;
        (void)tb;
        return std::pow(u3, -H) * sch.u1_part(u3) * sch.u2_part(u3);
      },
      sch.u_min, 1.0, q.rel_tol, q.abs_tol, q.max_subdivisions);
  const double scale = H * H * H;
  if (!outer.converged)
    throw QuadratureError("sigma_const: triple integral did not converge",
                          scale * outer.value, scale * outer.previous);

  ConstantsReport rep;
  rep.rho = rho_const(p);
  rep.triple_integral = scale * outer.value;
  rep.estimated_error =
      scale * outer.error + tail_bound * rep.triple_integral;
  rep.sigma = p.alpha / (H * beta_fn(sch.Ha + 1.0 - H, 2.0 * H - 1.0)) *
              std::sqrt(2.0 * rep.triple_integral);
  return rep;
}

// J_t of the norm split ||e^{alpha u} 1_[0,t]||^2 = I_t - J_t, after the
// substitution y = a_s reduces the y-integral to
//   J_t = 2 H^{2H}(2H-1) int_0^t e^{2 alpha s} B_low(e^{-s/H}; a', b') ds
// with a' = H alpha + 1 - H, b' = 2H - 1.
inline double j_integral(double t, const ModelParams& p,
                         const QuadratureSpec& q) {
  if (!(t >= 0.0)) throw std::invalid_argument("j_integral: t must be >= 0");
  q.validate();
  if (t == 0.0) return 0.0;
  const double H = p.hurst;
  const double ap = H * p.alpha + 1.0 - H;
  const double bp = 2.0 * H - 1.0;
  const double Bab = beta_fn(ap, bp);
  const auto r = tanh_sinh(
      [&](double s, double fa, double tb) {
        (void)fa;
        (void)tb;
        return std::exp(2.0 * p.alpha * s) *
               ibeta_regularized_logx(ap, bp, -s / H);
      },
      0.0, t, q.rel_tol, q.abs_tol, q.max_subdivisions);
  if (!r.converged)
    throw QuadratureError("j_integral: quadrature did not converge", r.value,
                          r.previous);
  return 2.0 * std::pow(H, 2.0 * H) * (2.0 * H - 1.0) * Bab * r.value;
}

// b_T = (1/(T rho)) int_0^T e^{-2 alpha t} ||e^{alpha u} 1_[0,t]||^2 dt.
// The I_t part integrates in closed form; the J_t part collapses by Fubini
// to a single integral, and the complete Beta factor cancels against rho:
//   b_T = 1 + (e^{-2 alpha T} - 1)/(2 alpha T)
//         - (1/T) int_0^T (1 - e^{-2 alpha (T-s)}) I_{e^{-s/H}}(a',b') ds.
inline double b_T_analytic(double T, const ModelParams& p,
                           const QuadratureSpec& q) {
  if (!(T > 0.0)) throw std::invalid_argument("b_T_analytic: T must be > 0");
  q.validate();
  const double H = p.hurst;
  const double ap = H * p.alpha + 1.0 - H;
  const double bp = 2.0 * H - 1.0;
  const double term1 =
      1.0 + std::expm1(-2.0 * p.alpha * T) / (2.0 * p.alpha * T);
  const auto r = tanh_sinh(
      [&](double s, double fa, double tb) {
        (void)fa;
        return -std::expm1(-2.0 * p.alpha * tb) *  // tb = T - s, exact
               ibeta_regularized_logx(ap, bp, -s / H);
      },
      0.0, T, q.rel_tol, q.abs_tol, q.max_subdivisions);
  if (!r.converged)
    throw QuadratureError("b_T_analytic: quadrature did not converge",
                          term1 - r.value / T, term1 - r.previous / T);
  return term1 - r.value / T;
}

}  // namespace fou2
