#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fou2/analytic.hpp"
#include "fou2/grid.hpp"
#include "fou2/params.hpp"
#include "fou2/quadrature.hpp"

// Finite-dimensional realization of the Hilbert space of step functions:
// the Gram matrix C_ij = E[(Y_{t_i}-Y_{t_i-1})(Y_{t_j}-Y_{t_j-1})]
//                      = int_cell_i int_cell_j phi(|w-z|) dw dz,
// its Cholesky factor for sampling increments, and a small binary cache.
//
// On uniform grids the matrix is Toeplitz and assembled from one 1-d
// integral per lag,
//   c(0) = 2 int_0^D (D-v) phi(v) dv,
//   c(k) = int_0^D (D-v) [phi(kD+v) + phi(kD-v)] dv,  k >= 1,
// with the v -> 0 (k=0) and v -> D (k=1) power-law singularities sitting at
// panel endpoints. Non-uniform grids go through per-pair lag integrals with
// a piecewise-linear overlap weight; O(n^2) integrals, kept for generality.

namespace fou2 {

struct GramMatrix {
  Eigen::MatrixXd C;
  std::optional<Eigen::VectorXd> uniform_lags;  // c(k), set on uniform grids
};

struct GramFactor {
  Eigen::MatrixXd L;    // lower triangular, L L^T ~= C
  double jitter = 0.0;  // relative ridge that was needed (0 if none)
  std::string method = "cholesky";
};

namespace detail {

// int_lo^hi m(u) phi(u) du where m is affine on the panel and phi may be
// singular at a zero endpoint only.
inline double lag_panel(double lo, double hi, double m_lo, double m_hi,
                        const ModelParams& p, const QuadratureSpec& q,
                        const char* what) {
  if (!(hi > lo)) return 0.0;
  const double slope = (m_hi - m_lo) / (hi - lo);
  const auto r = tanh_sinh(
      [&](double u, double fa, double tb) {
        (void)tb;
        const double arg = (lo == 0.0) ? fa : u;  // exact near the singularity
        const double m = m_lo + slope * fa;
        return m * stationary_profile(arg, p);
      },
      lo, hi, q.rel_tol, q.abs_tol, q.max_subdivisions);
  if (!r.converged)
    throw QuadratureError(std::string("gram_matrix: ") + what +
                              " did not converge",
                          r.value, r.previous);
  return r.value;
}

// Covariance of increments over two disjoint (possibly touching) cells
// [a,b] and [c,d], b <= c: integral of phi over the lag range with the
// interval-overlap weight.
inline double cell_pair_cov(double a, double b, double c, double d,
                            const ModelParams& p, const QuadratureSpec& q) {
  std::array<double, 4> br = {c - b, c - a, d - b, d - a};
  std::sort(br.begin(), br.end());
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double lo = br[k], hi = br[k + 1];
    if (!(hi > lo)) continue;
    auto ovl = [&](double u) {
      return std::min(b, d - u) - std::max(a, c - u);
    };
    acc += lag_panel(lo, hi, ovl(lo), ovl(hi), p, q, "cell pair integral");
  }
  return acc;
}

inline double cell_self_cov(double width, const ModelParams& p,
                            const QuadratureSpec& q) {
  return 2.0 * lag_panel(0.0, width, width, 0.0, p, q, "diagonal cell");
}

}  // namespace detail

inline GramMatrix gram_matrix(const TimeGrid& g, const ModelParams& p,
                              const QuadratureSpec& q) {
  q.validate();
  const int n = g.n;
  GramMatrix out;
  out.C.resize(n, n);
  if (g.uniform) {
    const double D = g.widths[0];
    Eigen::VectorXd lags(n);
    lags[0] = detail::cell_self_cov(D, p, q);
    for (int k = 1; k < n; ++k) {
      const double kD = k * D;
      const auto r = tanh_sinh(
          [&](double v, double fa, double tb) {
            (void)fa;
            // tb = D - v exactly; phi(kD - v) = phi(tb + (k-1) D)
            const double left = (k == 1) ? tb : (k - 1) * D + tb;
            return tb * (stationary_profile(kD + v, p) +
                         stationary_profile(left, p));
          },
          0.0, D, q.rel_tol, q.abs_tol, q.max_subdivisions);
      if (!r.converged)
        throw QuadratureError(
            "gram_matrix: lag " + std::to_string(k) + " did not converge",
            r.value, r.previous);
      lags[k] = r.value;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out.C(i, j) = lags[std::abs(i - j)];
    out.uniform_lags = lags;
  } else {
    for (int i = 0; i < n; ++i) {
      out.C(i, i) = detail::cell_self_cov(g.widths[i], p, q);
      for (int j = i + 1; j < n; ++j) {
        const double v = detail::cell_pair_cov(g.edges[i], g.edges[i + 1],
                                               g.edges[j], g.edges[j + 1], p,
                                               q);
        out.C(i, j) = v;
        out.C(j, i) = v;
      }
    }
  }
  return out;
}

// Cholesky with an escalating relative ridge. Sampling then draws
// increments as Delta = L xi with xi i.i.d. standard normal.
inline GramFactor factorize(const GramMatrix& G) {
  const Eigen::MatrixXd& C = G.C;
  if (C.rows() != C.cols() || C.rows() < 1)
    throw std::invalid_argument("factorize: matrix must be square and nonempty");
  const double base = C.trace() / static_cast<double>(C.rows());
  for (double lam : {0.0, 1e-14, 1e-12, 1e-10}) {
    Eigen::MatrixXd M = C;
    if (lam > 0.0) M.diagonal().array() += lam * base;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() == Eigen::Success) {
      GramFactor f;
      f.L = llt.matrixL();
      f.jitter = lam;
      f.method = (lam == 0.0) ? "cholesky" : "cholesky+jitter";
      return f;
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(C);
  const double min_pivot = ldlt.vectorD().minCoeff();
  throw FactorizationError(
      "factorize: matrix indefinite after maximal jitter; most negative "
      "pivot " + std::to_string(min_pivot),
      min_pivot);
}

// ---------------------------------------------------------------------------
// Binary cache: header (magic "FOU2GRAM", version u32, n u32, T f64,
// alpha f64, hurst f64) followed by n*n little-endian f64, row-major.

namespace detail {

inline constexpr char kGramMagic[8] = {'F', 'O', 'U', '2', 'G', 'R', 'A', 'M'};
inline constexpr std::uint32_t kGramVersion = 1;

inline std::vector<unsigned char> gram_header(const TimeGrid& g,
                                              const ModelParams& p) {
  std::vector<unsigned char> h(8 + 4 + 4 + 8 + 8 + 8);
  std::size_t off = 0;
  std::memcpy(h.data() + off, kGramMagic, 8);
  off += 8;
  const std::uint32_t ver = kGramVersion;
  std::memcpy(h.data() + off, &ver, 4);
  off += 4;
  const std::uint32_t n = static_cast<std::uint32_t>(g.n);
  std::memcpy(h.data() + off, &n, 4);
  off += 4;
  std::memcpy(h.data() + off, &g.horizon, 8);
  off += 8;
  std::memcpy(h.data() + off, &p.alpha, 8);
  off += 8;
  std::memcpy(h.data() + off, &p.hurst, 8);
  return h;
}

}  // namespace detail

// Content key for cache filenames: FNV-1a over the header bytes.
inline std::string gram_cache_key(const TimeGrid& g, const ModelParams& p) {
  const auto h = detail::gram_header(g, p);
  std::uint64_t x = 1469598103934665603ULL;
  for (unsigned char b : h) {
    x ^= b;
    x *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(x));
  return std::string(buf);
}

inline void save_gram(const std::string& path, const GramMatrix& G,
                      const TimeGrid& g, const ModelParams& p) {
  if (G.C.rows() != g.n)
    throw std::invalid_argument("save_gram: matrix does not match grid");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_gram: cannot open " + path);
  const auto h = detail::gram_header(g, p);
  os.write(reinterpret_cast<const char*>(h.data()),
           static_cast<std::streamsize>(h.size()));
  std::vector<double> row(g.n);
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) row[j] = G.C(i, j);
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(g.n * sizeof(double)));
  }
  if (!os) throw std::runtime_error("save_gram: write failed for " + path);
}

inline GramMatrix load_gram(const std::string& path, const TimeGrid& g,
                            const ModelParams& p) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_gram: cannot open " + path);
  const auto expect = detail::gram_header(g, p);
  std::vector<unsigned char> got(expect.size());
  is.read(reinterpret_cast<char*>(got.data()),
          static_cast<std::streamsize>(got.size()));
  if (!is || got != expect)
    throw std::runtime_error("load_gram: header mismatch in " + path);
  GramMatrix out;
  out.C.resize(g.n, g.n);
  std::vector<double> row(g.n);
  for (int i = 0; i < g.n; ++i) {
    is.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(g.n * sizeof(double)));
    for (int j = 0; j < g.n; ++j) out.C(i, j) = row[j];
  }
  if (!is) throw std::runtime_error("load_gram: truncated file " + path);
  return out;
}

}  // namespace fou2
