#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <vector>

#include "fou2/analytic.hpp"
#include "fou2/fit.hpp"
#include "fou2/rng.hpp"

using namespace fou2;

namespace {
const ModelParams kP{1.0, 0.7};

// product form of the covariance density as an independent oracle; only
// usable where e^{w/H} stays in range
double r_product_form(double w, double z, const ModelParams& p) {
  const double H = p.hurst;
  return std::pow(H, 2.0 * H - 1.0) * (2.0 * H - 1.0) *
         std::pow(std::exp(w / H) * std::exp(z / H), 1.0 - H) *
         std::pow(std::abs(std::exp(w / H) - std::exp(z / H)), 2.0 * H - 2.0);
}
}  // namespace

TEST_CASE("time change and its inverse") {
  CHECK(time_change(0.0, kP) == kP.hurst);
  CHECK(inverse_time_change(kP.hurst, kP) == 0.0);
  CHECK(inverse_time_change(time_change(3.7, kP), kP) ==
        Catch::Approx(3.7).margin(1e-12));
  CHECK_THROWS_AS(inverse_time_change(0.0, kP), std::domain_error);
  CHECK_THROWS_AS(inverse_time_change(-1.0, kP), std::domain_error);
  CHECK_THROWS_AS(time_change(-0.5, kP), std::invalid_argument);
}

TEST_CASE("covariance density: symmetry and diagonal policy") {
  CHECK(r_kernel(0.3, 1.1, kP) == r_kernel(1.1, 0.3, kP));
  CHECK(r_kernel(0.3, 1.1, kP) > 0.0);
  CHECK_THROWS_AS(r_kernel(0.7, 0.7, kP), std::domain_error);
  CHECK_THROWS_AS(r_kernel(-0.1, 0.2, kP), std::invalid_argument);
  // stationary: depends on |w-z| only, decreasing in the lag
  CHECK(r_kernel(1.0, 1.5, kP) == r_kernel(3.0, 3.5, kP));
  CHECK(r_kernel(0.0, 0.5, kP) > r_kernel(0.0, 1.0, kP));
  CHECK(r_kernel(0.0, 1.0, kP) > r_kernel(0.0, 2.0, kP));
}

TEST_CASE("stationary form equals the product form") {
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Philox4x64 gen{{11u, stream::kTest}};
    const auto w64 = gen({i, 0, 0, 0});
    const double w = 8.0 * u64_to_open_unit(w64[0]);
    double z = 8.0 * u64_to_open_unit(w64[1]);
    if (w == z) z += 0.25;
    const double got = r_kernel(w, z, kP);
    const double want = r_product_form(w, z, kP);
    CHECK(got == Catch::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("covariance density diagonal asymptotics") {
  // r(w, w+eps) * (eps/H)^{2-2H} -> H^{2H-1}(2H-1)
  const double limit =
      std::pow(kP.hurst, 2.0 * kP.hurst - 1.0) * (2.0 * kP.hurst - 1.0);
  for (double eps : {1e-4, 1e-5, 1e-6}) {
    const double v = r_kernel(2.0, 2.0 + eps, kP) *
                     std::pow(eps / kP.hurst, 2.0 - 2.0 * kP.hurst);
    CHECK(std::abs(v / limit - 1.0) < 1e-3);
  }
}

TEST_CASE("diagonal singularity is integrable") {
  for (double delta : {0.1, 1.0, 3.0}) {
    const auto q = tanh_sinh(
        [&](double, double fa, double) { return stationary_profile(fa, kP); },
        0.0, delta, 1e-10, 1e-13, 12);
    CHECK(q.converged);
    CHECK(q.value > 0.0);
    CHECK(std::isfinite(q.value));
  }
}

TEST_CASE("triple-integral integrand F") {
  CHECK(f_integrand(0.3, 0.9, 2.0, kP) > 0.0);
  CHECK_THROWS_AS(f_integrand(1.0, 0.5, 0.5, kP), std::domain_error);
  CHECK_THROWS_AS(f_integrand(0.0, 0.5, 1.0, kP), std::invalid_argument);

  // y1 = y3 = y, y2 = 1/2: re-expression with |y1-y3| = 0, term by term
  const double y = 1.0, H = 0.7, alpha = 1.0;
  const double want = std::exp(-0.5 * alpha) *
                      std::exp((1.0 - 1.0 / H) * (2.0 * y + 0.5)) *
                      std::pow(std::abs(std::exp(-0.5 / H) - std::exp(-y / H)),
                               2.0 * H - 2.0) *
                      std::pow(1.0 - std::exp(-y / H), 2.0 * H - 2.0);
  CHECK(f_integrand(y, 0.5, y, kP) == Catch::Approx(want).epsilon(1e-12));

  // literal product form at (2,1,3)
  const double lit = std::exp(-alpha * std::abs(2.0 - 3.0)) *
                     std::exp(-alpha * 1.0) *
                     std::exp((1.0 - 1.0 / H) * (2.0 + 1.0 + 3.0)) *
                     std::pow(std::abs(std::exp(-1.0 / H) - std::exp(-3.0 / H)),
                              2.0 * H - 2.0) *
                     std::pow(1.0 - std::exp(-2.0 / H), 2.0 * H - 2.0);
  CHECK(f_integrand(2.0, 1.0, 3.0, kP) == Catch::Approx(lit).epsilon(1e-12));
}

TEST_CASE("rho constant") {
  // alpha = 1 makes the Beta factor collapse: rho = H^{2H}
  const ModelParams p{1.0, 0.75};
  CHECK(rho_const(p) == Catch::Approx(std::pow(0.75, 1.5)).epsilon(1e-12));
  CHECK(rho_const(p) == Catch::Approx(0.649519052838329).epsilon(1e-9));

  // definition rearranged: rho(alpha) * alpha / B(H alpha + 1 - H, 2H - 1)
  // is independent of alpha
  const double H = 0.66;
  auto invariant = [&](double alpha) {
    const ModelParams pp{alpha, H};
    return rho_const(pp) * alpha / beta_fn(H * alpha + 1.0 - H, 2.0 * H - 1.0);
  };
  CHECK(invariant(1.3) == Catch::Approx(invariant(2.6)).epsilon(1e-12));

  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const ModelParams pp{0.1 + (5.0 - 0.1) * i / 9.0,
                           0.55 + (0.95 - 0.55) * j / 9.0};
      CHECK(rho_const(pp) > 0.0);
    }
}

TEST_CASE("sigma constant: finiteness, internal consistency, determinism") {
  const QuadratureSpec q = default_quadrature(kP);
  const ConstantsReport rep = sigma_const(kP, q);
  CHECK(rep.sigma > 0.0);
  CHECK(std::isfinite(rep.sigma));
  CHECK(rep.rho > 0.0);
  CHECK(rep.triple_integral > 0.0);
  CHECK(rep.estimated_error >= 0.0);
  // sigma is tied to its own triple_integral field
  const double H = kP.hurst;
  const double recon = kP.alpha /
                       (H * beta_fn(H * kP.alpha + 1.0 - H, 2.0 * H - 1.0)) *
                       std::sqrt(2.0 * rep.triple_integral);
  CHECK(rep.sigma == Catch::Approx(recon).epsilon(1e-14));

  const ConstantsReport rep2 = sigma_const(kP, q);
  CHECK(std::memcmp(&rep.sigma, &rep2.sigma, sizeof(double)) == 0);
  CHECK(std::memcmp(&rep.triple_integral, &rep2.triple_integral,
                    sizeof(double)) == 0);
}

TEST_CASE("sigma constant rejects an uncertified truncation") {
  QuadratureSpec q = default_quadrature(kP);
  q.truncation_length = 1.0;  // tail bound e^{-3/7} is nowhere near abs_tol
  CHECK_THROWS_AS(sigma_const(kP, q), std::invalid_argument);
}

TEST_CASE("triple integral agrees with importance sampling (smoke)") {
  // Exp-tilted sampling oracle; H = 0.8 keeps the weight variance finite
  // so the +-5 SE band is a sound check at moderate N.
  const ModelParams p{1.0, 0.8};
  const QuadratureSpec q = default_quadrature(p);
  const double I = sigma_const(p, q).triple_integral;
  const double lam = 1.0 / p.hurst - 1.0;
  const std::int64_t N = 300000;
  double sum = 0.0, sumsq = 0.0;
  const Philox4x64 gen{{2024u, stream::kOracle}};
  for (std::int64_t i = 0; i < N; ++i) {
    const auto w = gen({static_cast<std::uint64_t>(i), 0, 0, 0});
    const double y1 = -std::log(u64_to_open_unit(w[0])) / lam;
    const double y2 = -std::log(u64_to_open_unit(w[1])) / p.alpha;
    const double y3 = -std::log(u64_to_open_unit(w[2])) / lam;
    if (y2 == y3) continue;
    const double H = p.hurst, ex = 2.0 * H - 2.0;
    const double lw =
        -p.alpha * std::abs(y1 - y3) - lam * y2 +
        ex * (-std::min(y2, y3) / H +
              std::log(-std::expm1(-std::abs(y2 - y3) / H))) +
        ex * std::log(-std::expm1(-y1 / H)) - std::log(p.alpha) -
        2.0 * std::log(lam);
    const double wgt = std::exp(lw);
    sum += wgt;
    sumsq += wgt * wgt;
  }
  const double mean = sum / static_cast<double>(N);
  const double var = sumsq / static_cast<double>(N) - mean * mean;
  const double se = std::sqrt(var / static_cast<double>(N));
  CHECK(std::abs(mean - I) < 5.0 * se);
}

TEST_CASE("J integral matches the untransformed y-form") {
  const QuadratureSpec q = default_quadrature(kP);
  const double t = 1.5;
  const double H = kP.hurst, alpha = kP.alpha;
  const double ap = H * alpha + 1.0 - H, bp = 2.0 * H - 1.0;
  const double a0 = time_change(0.0, kP);
  const double at = time_change(t, kP);
  // J_t = 2 H^{2H(1-alpha)+1}(2H-1) int_{a0}^{a_t} y^{2Ha-1} B(a0/y; a', b') dy
  const auto oracle = tanh_sinh(
      [&](double y, double, double) {
        return std::pow(y, 2.0 * H * alpha - 1.0) *
               ibeta_lower(a0 / y, ap, bp);
      },
      a0, at, 1e-11, 1e-14, 13);
  REQUIRE(oracle.converged);
  const double want = 2.0 *
                      std::pow(H, 2.0 * H * (1.0 - alpha) + 1.0) *
                      (2.0 * H - 1.0) * oracle.value;
  CHECK(j_integral(t, kP, q) == Catch::Approx(want).epsilon(1e-8));
}

TEST_CASE("b_T: direct double-quadrature oracle at T = 2") {
  const QuadratureSpec q = default_quadrature(kP);
  const double T = 2.0;
  const double rho = rho_const(kP);
  // (1/(T rho)) int_0^T e^{-2 alpha t} (I_t - J_t) dt with
  // I_t = rho (e^{2 alpha t} - 1)
  const auto outer = tanh_sinh(
      [&](double t, double, double) {
        const double It = rho * std::expm1(2.0 * kP.alpha * t);
        const double Jt = (t == 0.0) ? 0.0 : j_integral(t, kP, q);
        return std::exp(-2.0 * kP.alpha * t) * (It - Jt);
      },
      0.0, T, 1e-9, 1e-12, 11);
  REQUIRE(outer.converged);
  const double want = outer.value / (T * rho);
  CHECK(b_T_analytic(T, kP, q) == Catch::Approx(want).epsilon(1e-7));
}

TEST_CASE("b_T behavior over the horizon grid") {
  const QuadratureSpec q = default_quadrature(kP);
  std::vector<std::pair<double, double>> gap;
  double prev_gap = 1.0;
  for (double T : {5.0, 10.0, 20.0, 40.0}) {
    const double b = b_T_analytic(T, kP, q);
    CHECK(b > 0.0);
    const double g = std::abs(b - 1.0);
    CHECK(g < prev_gap);  // monotone approach to 1 on this grid
    prev_gap = g;
    gap.emplace_back(T, g);
  }
  const RateFit fit = rate_regression(gap);
  CHECK(fit.slope > -1.3);
  CHECK(fit.slope < -0.8);
}
