#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fou2/analytic.hpp"
#include "fou2/fit.hpp"
#include "fou2/gram.hpp"
#include "fou2/grid.hpp"
#include "fou2/params.hpp"

// Second Wiener chaos algebra in the step-kernel model. A symmetric kernel
// k(s,t) = sum A_ij 1_cell_i(s) 1_cell_j(t) is represented by its
// coefficient matrix A; with C the Gram matrix of the cell increments,
//   I2(A)            = Delta' A Delta - tr(A C)        (Delta = increments)
//   <A, B>           = tr(A C B C)
//   (A o1 B)         = A C B                            (1-contraction)
//   ||A o1 B||^2     = tr(M C M' C),  M = A C B.
// The estimator's kernels h, g, l, f are evaluated at cell midpoints.

namespace fou2 {

enum class KernelLabel { h, g, l, f, custom };

struct KernelMatrix {
  Eigen::MatrixXd A;
  KernelLabel label = KernelLabel::custom;
};

// h(s,t) = e^{-alpha|t-s|} / (2 sqrt(T))
inline KernelMatrix kernel_h(const TimeGrid& g, const ModelParams& p) {
  const int n = g.n;
  const double c = 0.5 / std::sqrt(g.horizon);
  KernelMatrix k{Eigen::MatrixXd(n, n), KernelLabel::h};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      k.A(i, j) = c * std::exp(-p.alpha * std::abs(g.mids[i] - g.mids[j]));
  return k;
}

// l(u,v) = e^{-2 alpha T} e^{alpha(u+v)} / (2 alpha rho T), written as
// e^{-alpha((T-u) + (T-v))} so it never overflows.
inline KernelMatrix kernel_l(const TimeGrid& g, const ModelParams& p) {
  const int n = g.n;
  const double T = g.horizon;
  const double c = 0.5 / (p.alpha * rho_const(p) * T);
  KernelMatrix k{Eigen::MatrixXd(n, n), KernelLabel::l};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      k.A(i, j) =
          c * std::exp(-p.alpha * ((T - g.mids[i]) + (T - g.mids[j])));
  return k;
}

// g(u,v) = (e^{-alpha|u-v|} - e^{-2 alpha T} e^{alpha(u+v)}) / (2 alpha rho T)
//        = h(u,v)/(alpha rho sqrt(T)) - l(u,v); entrywise nonnegative.
inline KernelMatrix kernel_g(const TimeGrid& g, const ModelParams& p) {
  const int n = g.n;
  const double T = g.horizon;
  const double c = 0.5 / (p.alpha * rho_const(p) * T);
  KernelMatrix k{Eigen::MatrixXd(n, n), KernelLabel::g};
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      k.A(i, j) =
          c * (std::exp(-p.alpha * std::abs(g.mids[i] - g.mids[j])) -
               std::exp(-p.alpha * ((T - g.mids[i]) + (T - g.mids[j]))));
  return k;
}

// f = h / (rho sigma); the normalized numerator kernel.
inline KernelMatrix kernel_f(const TimeGrid& g, const ModelParams& p,
                             double sigma, double rho) {
  if (!(sigma > 0.0) || !(rho > 0.0))
    throw std::invalid_argument("kernel_f: sigma and rho must be > 0");
  KernelMatrix k = kernel_h(g, p);
  k.A /= (rho * sigma);
  k.label = KernelLabel::f;
  return k;
}

namespace detail {
inline void check_dims(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                       const char* who) {
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}
}  // namespace detail

// Second-chaos value of the step kernel: Delta' A Delta - tr(A C). The
// trace subtraction is the scalar term of the order-one product formula.
inline double i2_eval(const KernelMatrix& A, const Eigen::VectorXd& delta,
                      const GramMatrix& C) {
  detail::check_dims(A.A, C.C, "i2_eval");
  if (delta.size() != A.A.rows())
    throw std::invalid_argument("i2_eval: dimension mismatch");
  return delta.dot(A.A * delta) - A.A.cwiseProduct(C.C).sum();
}

// <A, B> in the twofold tensor space: tr(A C B C).
inline double hs_inner(const KernelMatrix& A, const KernelMatrix& B,
                       const GramMatrix& C) {
  detail::check_dims(A.A, B.A, "hs_inner");
  detail::check_dims(A.A, C.C, "hs_inner");
  const Eigen::MatrixXd P = A.A * C.C;
  if (&A == &B) return P.cwiseProduct(P.transpose()).sum();
  const Eigen::MatrixXd Q = B.A * C.C;
  return P.cwiseProduct(Q.transpose()).sum();
}

inline double hs_norm2(const KernelMatrix& A, const GramMatrix& C) {
  return hs_inner(A, A, C);
}

// Coefficient matrix of the 1-contraction A o1 B.
inline Eigen::MatrixXd contract1(const KernelMatrix& A, const KernelMatrix& B,
                                 const GramMatrix& C) {
  detail::check_dims(A.A, B.A, "contract1");
  detail::check_dims(A.A, C.C, "contract1");
  return A.A * (C.C * B.A);
}

// Norm^2 of a (generally non-symmetric) contraction matrix: tr(M C M' C).
inline double contraction_norm2(const Eigen::MatrixXd& M,
                                const GramMatrix& C) {
  detail::check_dims(M, C.C, "contraction_norm2");
  const Eigen::MatrixXd P = M * C.C;
  const Eigen::MatrixXd Q = M.transpose() * C.C;
  return P.cwiseProduct(Q.transpose()).sum();
}

// Gram-matrix route to b_T: trapezoid rule over the grid edges for
//   (1/(T rho)) int_0^T e^{-2 alpha t} q(t)' C q(t) dt,
// q(t)_i = e^{alpha mid_i} 1{cell_i in [0,t]}. Carried in the rescaled
// variables qt_i = e^{-alpha(t - mid_i)} so nothing overflows for large T.
inline double b_T_discrete(const TimeGrid& g, const ModelParams& p,
                           const GramMatrix& C) {
  detail::check_dims(C.C, C.C, "b_T_discrete");
  if (C.C.rows() != g.n)
    throw std::invalid_argument("b_T_discrete: Gram does not match grid");
  const int n = g.n;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);  // C * qt
  double v = 0.0;                                // qt' C qt
  double acc = 0.0;                              // edge t_0 contributes 0
  for (int k = 1; k <= n; ++k) {
    const int j = k - 1;
    const double step = g.edges[k] - g.edges[k - 1];
    const double decay = std::exp(-p.alpha * step);
    const double inj = std::exp(-p.alpha * (g.edges[k] - g.mids[j]));
    v = decay * decay * v + 2.0 * inj * decay * s[j] + inj * inj * C.C(j, j);
    s *= decay;
    s += inj * C.C.col(j);
    const double w = (k == n) ? 0.5 * (g.edges[n] - g.edges[n - 1])
                              : 0.5 * (g.edges[k + 1] - g.edges[k - 1]);
    acc += w * v;
  }
  return acc / (g.horizon * rho_const(p));
}

enum class Psi2Variant { printed, squared };

struct PsiValues {
  double psi1 = 0.0;
  double psi2 = 0.0;
  double psi3 = 0.0;
};

// The three functionals of kernel norms whose maximum dominates the
// Kolmogorov distance between I2(f)/(I2(g)+b) and the standard normal:
//   psi1 = sqrt((b^2 - 2||f||^2)^2 + 8||f o1 f||^2) / b^2
//   psi2 = 2 sqrt(2||f o1 g|| + <f,g>^2) / b^2      ("printed" variant;
//          the "squared" variant uses 2||f o1 g||^2 under the root)
//   psi3 = 2 sqrt(||g||^4 + 2||g o1 g||^2) / b^2
inline PsiValues psi_bounds(double b, double norm2_f, double norm_f1f,
                            double norm_g, double norm_g1g, double norm_f1g,
                            double inner_fg,
                            Psi2Variant variant = Psi2Variant::printed) {
  if (!(b > 0.0)) throw std::domain_error("psi_bounds: b_T must be > 0");
  const double b2 = b * b;
  PsiValues out;
  const double gap = b2 - 2.0 * norm2_f;
  out.psi1 = std::sqrt(gap * gap + 8.0 * norm_f1f * norm_f1f) / b2;
  const double cross = (variant == Psi2Variant::printed)
                           ? 2.0 * norm_f1g
                           : 2.0 * norm_f1g * norm_f1g;
  out.psi2 = 2.0 / b2 * std::sqrt(cross + inner_fg * inner_fg);
  out.psi3 = 2.0 / b2 *
             std::sqrt(std::pow(norm_g, 4.0) + 2.0 * norm_g1g * norm_g1g);
  return out;
}

struct ChaosDiagnostics {
  double T = 0.0;
  int n = 0;
  double b_T = 0.0;
  double norm2_f = 0.0;        // ||f||^2
  double norm_f1f = 0.0;       // ||f o1 f||
  double norm_g = 0.0;         // ||g||
  double norm_g1g = 0.0;       // ||g o1 g||
  double norm_f1g = 0.0;       // ||f o1 g||
  double inner_fg = 0.0;       // <f, g>
  double psi1 = 0.0;
  double psi2 = 0.0;           // as printed
  double psi2_variant = 0.0;   // contraction norm squared under the root
  double psi3 = 0.0;
};

inline PsiValues psi_bounds(const ChaosDiagnostics& d,
                            Psi2Variant variant = Psi2Variant::printed) {
  return psi_bounds(d.b_T, d.norm2_f, d.norm_f1f, d.norm_g, d.norm_g1g,
                    d.norm_f1g, d.inner_fg, variant);
}

// All diagnostics for one horizon, given a prebuilt Gram matrix and the
// analytic constants. b_T is the analytic value (the Gram route is a
// cross-check, see b_T_discrete).
inline ChaosDiagnostics chaos_diagnostics(const TimeGrid& g,
                                          const ModelParams& p,
                                          const GramMatrix& C, double sigma,
                                          double rho, double b_T) {
  ChaosDiagnostics d;
  d.T = g.horizon;
  d.n = g.n;
  d.b_T = b_T;
  const KernelMatrix f = kernel_f(g, p, sigma, rho);
  const KernelMatrix gg = kernel_g(g, p);
  d.norm2_f = hs_norm2(f, C);
  d.norm_f1f = std::sqrt(contraction_norm2(contract1(f, f, C), C));
  d.norm_g = std::sqrt(hs_norm2(gg, C));
  d.norm_g1g = std::sqrt(contraction_norm2(contract1(gg, gg, C), C));
  d.norm_f1g = std::sqrt(contraction_norm2(contract1(f, gg, C), C));
  d.inner_fg = hs_inner(f, gg, C);
  const PsiValues printed = psi_bounds(d, Psi2Variant::printed);
  const PsiValues squared = psi_bounds(d, Psi2Variant::squared);
  d.psi1 = printed.psi1;
  d.psi2 = printed.psi2;
  d.psi2_variant = squared.psi2;
  d.psi3 = printed.psi3;
  return d;
}

// Maps the horizon to a cell count with constant cell width across the
// grid family, so rate fits over T are not polluted by a T-dependent
// discretization bias.
struct ResolutionPolicy {
  double cells_per_unit = 12.8;
  int cap = 4096;

  int n_for(double T) const {
    if (!(T > 0.0)) throw std::invalid_argument("ResolutionPolicy: T <= 0");
    const double raw = cells_per_unit * T;
    int n = static_cast<int>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
    n = std::max(n, 2);
    return std::min(n, cap);
  }
};

struct LemmaTable {
  std::vector<ChaosDiagnostics> rows;
  // log-log slopes keyed b_gap, f_norm_gap, f1f, g_norm, g1g, f1g, fg_inner
  std::map<std::string, double> slopes;
};

inline LemmaTable lemma_tables(const std::vector<double>& T_list,
                               const ModelParams& p,
                               const ResolutionPolicy& policy,
                               const QuadratureSpec& q) {
  if (T_list.empty())
    throw std::invalid_argument("lemma_tables: empty T list");
  for (std::size_t i = 1; i < T_list.size(); ++i)
    if (!(T_list[i] > T_list[i - 1]))
      throw std::invalid_argument("lemma_tables: T list must be increasing");
  const ConstantsReport consts = sigma_const(p, q);
  LemmaTable table;
  for (double T : T_list) {
    const TimeGrid grid = build_grid(T, policy.n_for(T));
    const GramMatrix C = gram_matrix(grid, p, q);
    const double b = b_T_analytic(T, p, q);
    table.rows.push_back(
        chaos_diagnostics(grid, p, C, consts.sigma, consts.rho, b));
  }
  if (table.rows.size() >= 3) {
    auto fit_of = [&](auto&& get) {
      std::vector<std::pair<double, double>> pairs;
      for (const auto& r : table.rows) pairs.emplace_back(r.T, get(r));
      return rate_regression(pairs).slope;
    };
    table.slopes["b_gap"] =
        fit_of([](const ChaosDiagnostics& r) { return std::abs(r.b_T - 1.0); });
    table.slopes["f_norm_gap"] = fit_of([](const ChaosDiagnostics& r) {
      return std::abs(2.0 * r.norm2_f - 1.0);
    });
    table.slopes["f1f"] =
        fit_of([](const ChaosDiagnostics& r) { return r.norm_f1f; });
    table.slopes["g_norm"] =
        fit_of([](const ChaosDiagnostics& r) { return r.norm_g; });
    table.slopes["g1g"] =
        fit_of([](const ChaosDiagnostics& r) { return r.norm_g1g; });
    table.slopes["f1g"] =
        fit_of([](const ChaosDiagnostics& r) { return r.norm_f1g; });
    table.slopes["fg_inner"] =
        fit_of([](const ChaosDiagnostics& r) { return std::abs(r.inner_fg); });
  }
  return table;
}

inline std::string diagnostics_csv(const std::vector<ChaosDiagnostics>& rows) {
  std::string out =
      "T,n,b_T,norm2_f,norm_f1f,norm_g,norm_g1g,norm_f1g,inner_fg,psi1,psi2,"
      "psi2_variant,psi3\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g,%.17g,%.17g\n",
                  r.T, r.n, r.b_T, r.norm2_f, r.norm_f1f, r.norm_g, r.norm_g1g,
                  r.norm_f1g, r.inner_fg, r.psi1, r.psi2, r.psi2_variant,
                  r.psi3);
    out += buf;
  }
  return out;
}

}  // namespace fou2
