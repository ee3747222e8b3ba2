#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fou2/chaos.hpp"
#include "fou2/gram.hpp"
#include "fou2/mc.hpp"
#include "fou2/rng.hpp"

using namespace fou2;

namespace {
const ModelParams kP{1.0, 0.7};
const QuadratureSpec kQ = default_quadrature(kP);

KernelMatrix random_symmetric(int n, std::uint64_t index) {
  Eigen::MatrixXd M(n, n);
  fill_std_normal(31, stream::kTest, index, M.data(), n * n);
  KernelMatrix k{0.5 * (M + M.transpose()), KernelLabel::custom};
  return k;
}
}  // namespace

TEST_CASE("kernel matrices: diagonal, decomposition, positivity") {
  const TimeGrid g = build_grid(5.0, 32);
  const KernelMatrix h = kernel_h(g, kP);
  const double want = 0.5 / std::sqrt(5.0);
  for (int i = 0; i < g.n; ++i) CHECK(h.A(i, i) == want);

  // g = h/(alpha rho sqrt(T)) - l holds entrywise
  const KernelMatrix gg = kernel_g(g, kP);
  const KernelMatrix l = kernel_l(g, kP);
  const double rho = rho_const(kP);
  const Eigen::MatrixXd combo =
      h.A / (kP.alpha * rho * std::sqrt(5.0)) - l.A;
  const double scale = gg.A.cwiseAbs().maxCoeff();
  CHECK((gg.A - combo).cwiseAbs().maxCoeff() <= 1e-14 * scale);

  CHECK((gg.A.array() >= 0.0).all());
  CHECK((l.A.array() >= 0.0).all());

  // symmetry within representation accuracy
  CHECK((h.A - h.A.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((gg.A - gg.A.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("i2_eval: single-cell kernel and dimension checks") {
  const TimeGrid g = build_grid(2.0, 8);
  const GramMatrix C = gram_matrix(g, kP, kQ);
  Eigen::VectorXd delta(g.n);
  fill_std_normal(5, stream::kTest, 0, delta.data(), g.n);
  const int k = 3;
  KernelMatrix unit{Eigen::MatrixXd::Zero(g.n, g.n), KernelLabel::custom};
  unit.A(k, k) = 1.0;
  CHECK(i2_eval(unit, delta, C) ==
        Catch::Approx(delta[k] * delta[k] - C.C(k, k)).epsilon(1e-14));

  KernelMatrix wrong{Eigen::MatrixXd::Zero(4, 4), KernelLabel::custom};
  CHECK_THROWS_AS(i2_eval(wrong, delta, C), std::invalid_argument);
}

TEST_CASE("i2 samples have zero mean and the isometry variance") {
  const TimeGrid g = build_grid(5.0, 32);
  const GramMatrix C = gram_matrix(g, kP, kQ);
  const GramFactor fac = factorize(C);
  const ConstantsReport consts = sigma_const(kP, kQ);
  const KernelMatrix f = kernel_f(g, kP, consts.sigma, consts.rho);

  const std::int64_t N = 100000;
  const double var_th = 2.0 * hs_norm2(f, C);
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  Eigen::VectorXd xi(g.n), d(g.n);
  for (std::int64_t i = 0; i < N; ++i) {
    fill_std_normal(17, stream::kTest, static_cast<std::uint64_t>(i),
                    xi.data(), g.n);
    d.noalias() = fac.L.triangularView<Eigen::Lower>() * xi;
    const double v = i2_eval(f, d, C);
    sum += v;
    sum2 += v * v;
    sum4 += v * v * v * v;
  }
  const double mean = sum / static_cast<double>(N);
  CHECK(std::abs(mean) < 5.0 * std::sqrt(var_th / static_cast<double>(N)));
  const double var = sum2 / static_cast<double>(N) - mean * mean;
  const double m4 = sum4 / static_cast<double>(N);
  const double se_var = std::sqrt(
      std::max(m4 - var * var, 0.0) / static_cast<double>(N));
  CHECK(std::abs(var - var_th) < 5.0 * se_var);
}

TEST_CASE("empirical covariance of two chaoses matches 2<A,B>") {
  const TimeGrid g = build_grid(5.0, 24);
  const GramMatrix C = gram_matrix(g, kP, kQ);
  const GramFactor fac = factorize(C);
  const ConstantsReport consts = sigma_const(kP, kQ);
  const KernelMatrix f = kernel_f(g, kP, consts.sigma, consts.rho);
  const KernelMatrix gg = kernel_g(g, kP);
  const double want = 2.0 * hs_inner(f, gg, C);

  const std::int64_t N = 100000;
  double sa = 0, sb = 0, sab = 0, saabb = 0;
  Eigen::VectorXd xi(g.n), d(g.n);
  for (std::int64_t i = 0; i < N; ++i) {
    fill_std_normal(23, stream::kTest, static_cast<std::uint64_t>(i),
                    xi.data(), g.n);
    d.noalias() = fac.L.triangularView<Eigen::Lower>() * xi;
    const double a = i2_eval(f, d, C);
    const double b = i2_eval(gg, d, C);
    sa += a;
    sb += b;
    sab += a * b;
    saabb += a * a * b * b;
  }
  const double n = static_cast<double>(N);
  const double cov = sab / n - (sa / n) * (sb / n);
  const double se = std::sqrt(std::max(saabb / n - cov * cov, 0.0) / n);
  CHECK(std::abs(cov - want) < 5.0 * se);
}

TEST_CASE("hs_inner: symmetry, positivity, trace cyclicity") {
  const TimeGrid g = build_grid(3.0, 24);
  const GramMatrix C = gram_matrix(g, kP, kQ);
  for (std::uint64_t i = 0; i < 10; ++i) {
    const KernelMatrix A = random_symmetric(g.n, 2 * i);
    const KernelMatrix B = random_symmetric(g.n, 2 * i + 1);
    const double ab = hs_inner(A, B, C);
    const double ba = hs_inner(B, A, C);
    CHECK(ab == Catch::Approx(ba).epsilon(1e-12));
    CHECK(hs_inner(A, A, C) >= 0.0);
  }
}

TEST_CASE("contraction identities") {
  const TimeGrid g = build_grid(3.0, 24);
  const GramMatrix C = gram_matrix(g, kP, kQ);

  // identity-coefficient kernel: contraction reduces to C * B
  const KernelMatrix id{Eigen::MatrixXd::Identity(g.n, g.n),
                        KernelLabel::custom};
  const KernelMatrix B0 = random_symmetric(g.n, 101);
  CHECK((contract1(id, B0, C) - C.C * B0.A).cwiseAbs().maxCoeff() <
        1e-12 * B0.A.cwiseAbs().maxCoeff());

  // ||A o1 B||^2 = <A o1 A, B o1 B>
  for (std::uint64_t i = 0; i < 5; ++i) {
    const KernelMatrix A = random_symmetric(g.n, 777 + 2 * i);
    const KernelMatrix B = random_symmetric(g.n, 778 + 2 * i);
    const double lhs = contraction_norm2(contract1(A, B, C), C);
    const Eigen::MatrixXd AA = contract1(A, A, C);
    const Eigen::MatrixXd BB = contract1(B, B, C);
    const Eigen::MatrixXd P = AA * C.C;
    const Eigen::MatrixXd Q = BB * C.C;
    const double rhs = P.cwiseProduct(Q.transpose()).sum();
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("b_T from the Gram matrix") {
  const TimeGrid g = build_grid(10.0, 1024);
  const GramMatrix C = gram_matrix(g, kP, kQ);
  const double b_disc = b_T_discrete(g, kP, C);
  CHECK(b_disc > 0.0);
  const double b_ana = b_T_analytic(10.0, kP, kQ);
  CHECK(b_disc == Catch::Approx(b_ana).epsilon(0.005));
}

TEST_CASE("denominator positivity over a large sample sweep") {
  const TimeGrid g = build_grid(10.0, 128);
  const ConstantsReport consts = sigma_const(kP, kQ);
  const StatisticSampler s =
      StatisticSampler::build(g, kP, kQ, consts.sigma, consts.rho);
  // mc_run throws on any sample with I2(g) + b_T <= 0
  CHECK_NOTHROW(mc_run(s, 4242, 100000));
}

TEST_CASE("psi bounds: degenerate case, positivity, domain") {
  const PsiValues z = psi_bounds(1.0, 0.5, 0.0, 0.1, 0.01, 0.02, 0.005);
  CHECK(z.psi1 == 0.0);  // b^2 = 2 ||f||^2 and f o1 f = 0
  CHECK(z.psi2 >= 0.0);
  CHECK(z.psi3 >= 0.0);
  CHECK_THROWS_AS(psi_bounds(0.0, 0.5, 0.0, 0.1, 0.01, 0.02, 0.005),
                  std::domain_error);
  CHECK_THROWS_AS(psi_bounds(-1.0, 0.5, 0.0, 0.1, 0.01, 0.02, 0.005),
                  std::domain_error);
  // printed variant uses the unsquared contraction norm
  const PsiValues printed =
      psi_bounds(1.0, 0.5, 0.0, 0.1, 0.01, 0.04, 0.0, Psi2Variant::printed);
  const PsiValues squared =
      psi_bounds(1.0, 0.5, 0.0, 0.1, 0.01, 0.04, 0.0, Psi2Variant::squared);
  CHECK(printed.psi2 == Catch::Approx(2.0 * std::sqrt(2.0 * 0.04)));
  CHECK(squared.psi2 == Catch::Approx(2.0 * std::sqrt(2.0 * 0.04 * 0.04)));
}

TEST_CASE("diagnostic table over the horizon grid") {
  const std::vector<double> t_list{5.0, 10.0, 20.0, 40.0};
  const LemmaTable tab = lemma_tables(t_list, kP, ResolutionPolicy{}, kQ);
  REQUIRE(tab.rows.size() == 4);

  for (std::size_t i = 0; i < tab.rows.size(); ++i) {
    const auto& r = tab.rows[i];
    CHECK(r.T == t_list[i]);
    CHECK(r.n == ResolutionPolicy{}.n_for(r.T));
    // Cauchy-Schwarz between the f,g kernels
    CHECK(std::abs(r.inner_fg) <=
          std::sqrt(r.norm2_f) * r.norm_g * (1.0 + 1e-12));
    CHECK(r.norm_f1f >= 0.0);
    CHECK(r.norm_g1g >= 0.0);
  }

  // slope windows for the vanishing quantities
  REQUIRE(tab.slopes.count("b_gap") == 1);
  REQUIRE(tab.slopes.count("f_norm_gap") == 1);
  CHECK(tab.slopes.at("b_gap") > -1.3);
  CHECK(tab.slopes.at("b_gap") < -0.8);
  CHECK(tab.slopes.at("f_norm_gap") > -1.3);
  CHECK(tab.slopes.at("f_norm_gap") < -0.8);
  CHECK(tab.slopes.at("g_norm") > -0.65);
  CHECK(tab.slopes.at("g_norm") < -0.35);

  // boundedness of the scaled products
  auto ratio_of = [&](auto&& get, double power) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
      const double v = get(tab.rows[i]) * std::pow(tab.rows[i].T, power);
      lo = (i == 0) ? v : std::min(lo, v);
      hi = (i == 0) ? v : std::max(hi, v);
    }
    return hi / lo;
  };
  CHECK(ratio_of([](const ChaosDiagnostics& r) { return r.norm_f1f; }, 0.5) <
        3.0);
  CHECK(ratio_of([](const ChaosDiagnostics& r) { return r.norm_g1g; }, 1.5) <
        5.0);
  CHECK(ratio_of([](const ChaosDiagnostics& r) { return r.norm_f1g; }, 1.0) <
        5.0);
  CHECK(ratio_of([](const ChaosDiagnostics& r) { return std::abs(r.inner_fg); },
                 0.5) < 5.0);
  CHECK(ratio_of(
            [](const ChaosDiagnostics& r) {
              return std::abs(r.b_T * r.b_T - 2.0 * r.norm2_f);
            },
            1.0) < 5.0);

  // psi values decrease along the grid
  for (std::size_t i = 1; i < tab.rows.size(); ++i) {
    CHECK(tab.rows[i].psi1 < tab.rows[i - 1].psi1);
    CHECK(tab.rows[i].psi2 < tab.rows[i - 1].psi2);
    CHECK(tab.rows[i].psi2_variant < tab.rows[i - 1].psi2_variant);
    CHECK(tab.rows[i].psi3 < tab.rows[i - 1].psi3);
  }

  // CSV schema
  const std::string csv = diagnostics_csv(tab.rows);
  CHECK(csv.rfind("T,n,b_T,norm2_f,norm_f1f,norm_g,norm_g1g,norm_f1g,"
                  "inner_fg,psi1,psi2,psi2_variant,psi3\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("2||f||^2 approaches 1 and I2(H) = rho sigma I2(F)") {
  const ConstantsReport consts = sigma_const(kP, kQ);
  const TimeGrid g = build_grid(10.0, 128);
  const GramMatrix C = gram_matrix(g, kP, kQ);
  const KernelMatrix f = kernel_f(g, kP, consts.sigma, consts.rho);
  const KernelMatrix h = kernel_h(g, kP);
  // linearity of the quadratic form: I2(h) = rho sigma I2(f) per sample
  Eigen::VectorXd xi(g.n), d(g.n);
  const GramFactor fac = factorize(C);
  for (std::uint64_t i = 0; i < 20; ++i) {
    fill_std_normal(3, stream::kTest, i, xi.data(), g.n);
    d.noalias() = fac.L.triangularView<Eigen::Lower>() * xi;
    CHECK(i2_eval(h, d, C) ==
          Catch::Approx(consts.rho * consts.sigma * i2_eval(f, d, C))
              .epsilon(1e-12));
  }
}

TEST_CASE("resolution policy") {
  const ResolutionPolicy pol{};
  CHECK(pol.n_for(5.0) == 64);
  CHECK(pol.n_for(10.0) == 128);
  CHECK(pol.n_for(20.0) == 256);
  CHECK(pol.n_for(40.0) == 512);
  CHECK(pol.n_for(1000.0) == 4096);  // cap
  ResolutionPolicy fine{100.0, 128};
  CHECK(fine.n_for(5.0) == 128);
  CHECK_THROWS_AS(pol.n_for(0.0), std::invalid_argument);
}
