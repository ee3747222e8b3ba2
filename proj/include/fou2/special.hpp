#pragma once

#include <cmath>
#include <stdexcept>

// Gamma/Beta family plus the standard normal CDF and quantile.
// The quantile is Wichura's PPND16 rational approximation (absolute error
// ~1e-16), chosen so Gaussian variate generation is a pure arithmetic
// transform of uniforms and therefore reproducible bit-for-bit.

namespace fou2 {

inline double log_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("log_beta: arguments must be > 0");
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// B(a,b) = Gamma(a)Gamma(b)/Gamma(a+b), via log-Gamma to dodge overflow.
inline double beta_fn(double a, double b) { return std::exp(log_beta(a, b)); }

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double ibeta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("ibeta_cf: continued fraction did not converge");
}

// Core of I_x(a,b) taking both x and 1-x (the caller may know the
// complement to better accuracy than 1-x would compute) plus log x.
inline double ibeta_reg_core(double a, double b, double x, double xc,
                             double log_x) {
  if (x <= 0.0) return 0.0;
  if (xc <= 0.0) return 1.0;
  const double lbt = log_x * a + std::log(xc) * b - log_beta(a, b);
  const double bt = std::exp(lbt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * ibeta_cf(a, b, x) / a;
  return 1.0 - bt * ibeta_cf(b, a, xc) / b;
}

}  // namespace detail

// Regularized incomplete beta I_x(a,b).
inline double ibeta_regularized(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("ibeta_regularized: a, b must be > 0");
  if (!(x >= 0.0) || !(x <= 1.0))
    throw std::domain_error("ibeta_regularized: x must be in [0, 1]");
  return detail::ibeta_reg_core(a, b, x, 1.0 - x, std::log(x));
}

// Same, with x = exp(log_x) supplied in log form. Used where x is an
// exponential of a grid variable and 1 - x would cancel.
inline double ibeta_regularized_logx(double a, double b, double log_x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("ibeta_regularized_logx: a, b must be > 0");
  if (!(log_x <= 0.0))
    throw std::domain_error("ibeta_regularized_logx: log_x must be <= 0");
  const double x = std::exp(log_x);
  const double xc = -std::expm1(log_x);
  return detail::ibeta_reg_core(a, b, x, xc, log_x);
}

// Lower (non-regularized) incomplete beta B(x; a, b).
inline double ibeta_lower(double x, double a, double b) {
  return ibeta_regularized(a, b, x) * beta_fn(a, b);
}

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Inverse standard normal CDF, PPND16 (AS 241).
inline double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::domain_error("normal_quantile: p must be in (0, 1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        q * (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) *
                      r + 6.7265770927008700853e+4) * r +
                  4.5921953931549871457e+4) * r + 1.3731693765509461125e+4) *
                    r + 1.9715909503065514427e+3) * r +
                1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
    const double den =
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
    return num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
            3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
          4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
          2.05319162663775882187e+0) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
          5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                  r + 1.84631831751005468180e-5) * r +
              7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r +
            1.36929880922735805310e-1) * r + 5.99832206555887937690e-1) * r +
         1.0);
    val = num / den;
  }
  return (q < 0.0) ? -val : val;
}

}  // namespace fou2
