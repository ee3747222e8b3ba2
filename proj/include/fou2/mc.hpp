#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fou2/chaos.hpp"
#include "fou2/fit.hpp"
#include "fou2/gram.hpp"
#include "fou2/grid.hpp"
#include "fou2/params.hpp"
#include "fou2/rng.hpp"
#include "fou2/special.hpp"

// Monte Carlo engine for the normalized estimation error
//   sqrt(T)/sigma (alpha - alpha~_T) = I2(f) / (I2(g) + b_T).
// Two routes evaluate the statistic from the same Gaussian increment
// vector Delta = L xi:
//   chaos route: ratio of the two quadratic forms above;
//   path route:  build X on the grid from the explicit solution, form the
//                Skorohod integral as forward Riemann sum minus the
//                Malliavin trace correction, divide by the trapezoid
//                of X^2. The two differ only by midpoint-vs-edge kernel
//                discretization and must agree to O(cell width).

namespace fou2 {

class StatisticSampler {
 public:
  StatisticSampler(TimeGrid grid, ModelParams params, GramMatrix gram,
                   GramFactor factor, KernelMatrix f, KernelMatrix g,
                   double b_T, double sigma)
      : grid_(std::move(grid)),
        params_(params),
        C_(std::move(gram.C)),
        L_(std::move(factor.L)),
        F_(std::move(f.A)),
        G_(std::move(g.A)),
        b_T_(b_T),
        sigma_(sigma) {
    const int n = grid_.n;
    if (C_.rows() != n || L_.rows() != n || F_.rows() != n || G_.rows() != n)
      throw std::invalid_argument("StatisticSampler: dimension mismatch");
    tr_fc_ = F_.cwiseProduct(C_).sum();
    tr_gc_ = G_.cwiseProduct(C_).sum();
    // path route precomputation
    decay_.resize(n);
    inject_.resize(n);
    for (int k = 1; k <= n; ++k) {
      decay_[k - 1] = std::exp(-params_.alpha * (grid_.edges[k] - grid_.edges[k - 1]));
      inject_[k - 1] = std::exp(-params_.alpha * (grid_.edges[k] - grid_.mids[k - 1]));
    }
    // Malliavin trace of the forward sum: sum_i <k_{i-1}, 1_cell_i> with
    // k_{i-1}(.) = e^{-alpha(t_{i-1} - .)} on [0, t_{i-1}]; constant in Delta.
    skorohod_corr_ = 0.0;
    for (int a = 1; a < n; ++a) {
      double w = 0.0;
      for (int b = 0; b < a; ++b)
        w += std::exp(-params_.alpha * (grid_.edges[a] - grid_.mids[b])) *
             C_(b, a);
      skorohod_corr_ += w;
    }
    trapz_.resize(n + 1);
    trapz_[0] = 0.5 * (grid_.edges[1] - grid_.edges[0]);
    for (int k = 1; k < n; ++k)
      trapz_[k] = 0.5 * (grid_.edges[k + 1] - grid_.edges[k - 1]);
    trapz_[n] = 0.5 * (grid_.edges[n] - grid_.edges[n - 1]);
  }

  // Convenience builder: Gram, factor, kernels and the Gram-route b_T.
  static StatisticSampler build(const TimeGrid& grid, const ModelParams& p,
                                const QuadratureSpec& q, double sigma,
                                double rho) {
    GramMatrix C = gram_matrix(grid, p, q);
    GramFactor f = factorize(C);
    const double b = b_T_discrete(grid, p, C);
    return StatisticSampler(grid, p, std::move(C), std::move(f),
                            kernel_f(grid, p, sigma, rho), kernel_g(grid, p),
                            b, sigma);
  }

  const TimeGrid& grid() const { return grid_; }
  const ModelParams& params() const { return params_; }
  double b_T() const { return b_T_; }
  double sigma() const { return sigma_; }
  const Eigen::MatrixXd& gram() const { return C_; }
  const Eigen::MatrixXd& cholesky() const { return L_; }
  double trace_fc() const { return tr_fc_; }
  double trace_gc() const { return tr_gc_; }

  void draw_delta(std::uint64_t seed, std::uint64_t index,
                  Eigen::VectorXd& delta) const {
    Eigen::VectorXd xi(grid_.n);
    fill_std_normal(seed, stream::kStatistic, index, xi.data(), grid_.n);
    delta.noalias() = L_.triangularView<Eigen::Lower>() * xi;
  }

  double chaos_from_delta(const Eigen::VectorXd& delta,
                          std::int64_t index = -1) const {
    const double num = delta.dot(F_ * delta) - tr_fc_;
    const double den = delta.dot(G_ * delta) - tr_gc_ + b_T_;
    if (!(den > 0.0))
      throw DegenerateSampleError(
          "chaos statistic: denominator <= 0 at sample " +
              std::to_string(index),
          index);
    return num / den;
  }

  double path_from_delta(const Eigen::VectorXd& delta,
                         std::int64_t index = -1) const {
    const int n = grid_.n;
    double X = 0.0;  // X at edge k
    double forward = 0.0;
    double xsq = trapz_[0] * X * X;
    for (int k = 1; k <= n; ++k) {
      forward += X * delta[k - 1];
      X = decay_[k - 1] * X + inject_[k - 1] * delta[k - 1];
      xsq += trapz_[k] * X * X;
    }
    if (!(xsq > 0.0))
      throw DegenerateSampleError(
          "path statistic: zero denominator at sample " + std::to_string(index),
          index);
    return std::sqrt(grid_.horizon) / sigma_ * (forward - skorohod_corr_) / xsq;
  }

  double sample_chaos(std::uint64_t seed, std::uint64_t index) const {
    Eigen::VectorXd delta(grid_.n);
    draw_delta(seed, index, delta);
    return chaos_from_delta(delta, static_cast<std::int64_t>(index));
  }

  double sample_path(std::uint64_t seed, std::uint64_t index) const {
    Eigen::VectorXd delta(grid_.n);
    draw_delta(seed, index, delta);
    return path_from_delta(delta, static_cast<std::int64_t>(index));
  }

  // Batched chaos-route evaluation of samples [first, first+count) into
  // out[0..count). One fixed-width block at a time so the arithmetic is
  // identical no matter how blocks are distributed over threads.
  void sample_block(std::uint64_t seed, std::int64_t first, int count,
                    double* out) const {
    const int n = grid_.n;
    Eigen::MatrixXd xi(n, count);
    for (int j = 0; j < count; ++j)
      fill_std_normal(seed, stream::kStatistic,
                      static_cast<std::uint64_t>(first + j), xi.col(j).data(),
                      n);
    const Eigen::MatrixXd delta = L_.triangularView<Eigen::Lower>() * xi;
    const Eigen::MatrixXd fd = F_ * delta;
    const Eigen::MatrixXd gd = G_ * delta;
    for (int j = 0; j < count; ++j) {
      const double num = delta.col(j).dot(fd.col(j)) - tr_fc_;
      const double den = delta.col(j).dot(gd.col(j)) - tr_gc_ + b_T_;
      if (!(den > 0.0))
        throw DegenerateSampleError(
            "chaos statistic: denominator <= 0 at sample " +
                std::to_string(first + j),
            first + j);
      out[j] = num / den;
    }
  }

 private:
  TimeGrid grid_;
  ModelParams params_;
  Eigen::MatrixXd C_, L_, F_, G_;
  double b_T_, sigma_;
  double tr_fc_ = 0.0, tr_gc_ = 0.0;
  Eigen::VectorXd decay_, inject_;
  double skorohod_corr_ = 0.0;
  Eigen::VectorXd trapz_;
};

struct McRun {
  std::uint64_t seed = 0;
  std::int64_t n_samples = 0;
  std::vector<double> samples;
  double T = 0.0;
  int n = 0;
  double alpha = 0.0;
  double hurst = 0.0;
};

// Deterministic parallel sweep: fixed blocks of 256 samples claimed from an
// atomic counter. Results are bit-identical for any thread count.
inline McRun mc_run(const StatisticSampler& s, std::uint64_t seed,
                    std::int64_t n_samples, int threads = 0) {
  if (n_samples < 1)
    throw std::invalid_argument("mc_run: n_samples must be >= 1");
  constexpr int kBlock = 256;
  const std::int64_t n_blocks = (n_samples + kBlock - 1) / kBlock;
  if (threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = static_cast<int>(std::max(1u, std::min(hw, 8u)));
  }
  threads = static_cast<int>(
      std::min<std::int64_t>(threads, std::max<std::int64_t>(n_blocks, 1)));

  McRun run;
  run.seed = seed;
  run.n_samples = n_samples;
  run.samples.resize(static_cast<std::size_t>(n_samples));
  run.T = s.grid().horizon;
  run.n = s.grid().n;
  run.alpha = s.params().alpha;
  run.hurst = s.params().hurst;

  std::atomic<std::int64_t> next{0};
  std::atomic<std::int64_t> degenerate{std::numeric_limits<std::int64_t>::max()};
  auto worker = [&] {
    for (;;) {
      const std::int64_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      const std::int64_t first = b * kBlock;
      const int count =
          static_cast<int>(std::min<std::int64_t>(kBlock, n_samples - first));
      try {
        s.sample_block(seed, first, count,
                       run.samples.data() + static_cast<std::size_t>(first));
      } catch (const DegenerateSampleError& e) {
        std::int64_t cur = degenerate.load();
        while (e.sample_index < cur &&
               !degenerate.compare_exchange_weak(cur, e.sample_index)) {
        }
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  const std::int64_t bad = degenerate.load();
  if (bad != std::numeric_limits<std::int64_t>::max())
    throw DegenerateSampleError(
        "mc_run: degenerate sample (denominator <= 0) at index " +
            std::to_string(bad),
        bad);
  return run;
}

struct KsReport {
  double ks_distance = 0.0;
  double dkw_radius = 0.0;
  std::int64_t n_samples = 0;
  std::string target = "standard_normal";
  double delta = 0.05;  // DKW confidence parameter
};

// Exact sup over the empirical CDF jump points of |F_hat - Phi|.
inline KsReport kolmogorov_distance(const std::vector<double>& samples,
                                    double delta = 0.05) {
  const std::int64_t N = static_cast<std::int64_t>(samples.size());
  if (N < 100)
    throw std::invalid_argument("kolmogorov_distance: need >= 100 samples");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("kolmogorov_distance: delta must be in (0,1)");
  std::vector<double> sorted = samples;
  for (double v : sorted)
    if (!std::isfinite(v))
      throw std::invalid_argument("kolmogorov_distance: non-finite sample");
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  const double inv_n = 1.0 / static_cast<double>(N);
  for (std::int64_t k = 0; k < N; ++k) {
    const double phi = normal_cdf(sorted[static_cast<std::size_t>(k)]);
    d = std::max(d, (static_cast<double>(k) + 1.0) * inv_n - phi);
    d = std::max(d, phi - static_cast<double>(k) * inv_n);
  }
  KsReport rep;
  rep.ks_distance = d;
  rep.dkw_radius = std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(N)));
  rep.n_samples = N;
  rep.delta = delta;
  return rep;
}

// Spec-shaped single-sample entry points. The index identifies the sample
// within the seed's stream; the draw is addressable as (seed, index).
inline double sample_statistic_chaos(std::uint64_t seed, const TimeGrid& grid,
                                     const ModelParams& p, GramMatrix C,
                                     GramFactor factor, KernelMatrix f,
                                     KernelMatrix g, double b_T, double sigma,
                                     std::uint64_t index = 0) {
  StatisticSampler s(grid, p, std::move(C), std::move(factor), std::move(f),
                     std::move(g), b_T, sigma);
  return s.sample_chaos(seed, index);
}

inline double sample_statistic_path(std::uint64_t seed, const TimeGrid& grid,
                                    const ModelParams& p, GramMatrix C,
                                    GramFactor factor, double sigma,
                                    std::uint64_t index = 0) {
  StatisticSampler s(grid, p, C, std::move(factor), kernel_h(grid, p),
                     kernel_g(grid, p), 1.0, sigma);
  return s.sample_path(seed, index);
}

}  // namespace fou2
