#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fou2/analytic.hpp"
#include "fou2/chaos.hpp"
#include "fou2/fit.hpp"
#include "fou2/mc.hpp"
#include "fou2/params.hpp"

// One-call driver for the rate experiment: for each horizon T build the
// Gram model, sample the normalized estimation error N times, measure the
// Kolmogorov distance to the standard normal, then fit log(ks) ~ log(T).

namespace fou2 {

struct ExperimentConfig {
  ModelParams params;
  std::vector<double> t_list{5.0, 10.0, 20.0, 40.0};
  ResolutionPolicy policy{};
  std::int64_t n_samples = 100000;
  std::uint64_t seed = 42;
  QuadratureSpec quad{};
  int threads = 0;

  explicit ExperimentConfig(ModelParams p) : params(p) {}
};

struct BerryEsseenEntry {
  double T = 0.0;
  int n = 0;
  KsReport ks;
};

struct BerryEsseenReport {
  std::vector<BerryEsseenEntry> entries;
  RateFit fit;
  double sigma = 0.0;
  double rho = 0.0;
};

inline BerryEsseenReport berry_esseen(const ExperimentConfig& cfg) {
  if (cfg.t_list.size() < 3)
    throw std::invalid_argument("berry_esseen: need at least 3 horizons");
  QuadratureSpec q = cfg.quad;
  if (q.truncation_length == 0.0)
    q.truncation_length = default_truncation(cfg.params, q.abs_tol);
  const ConstantsReport consts = sigma_const(cfg.params, q);
  BerryEsseenReport rep;
  rep.sigma = consts.sigma;
  rep.rho = consts.rho;
  std::vector<std::pair<double, double>> pairs;
  for (double T : cfg.t_list) {
    const TimeGrid grid = build_grid(T, cfg.policy.n_for(T));
    const StatisticSampler sampler =
        StatisticSampler::build(grid, cfg.params, q, consts.sigma, consts.rho);
    const McRun run = mc_run(sampler, cfg.seed, cfg.n_samples, cfg.threads);
    BerryEsseenEntry entry;
    entry.T = T;
    entry.n = grid.n;
    entry.ks = kolmogorov_distance(run.samples);
    pairs.emplace_back(T, entry.ks.ks_distance);
    rep.entries.push_back(std::move(entry));
  }
  rep.fit = rate_regression(pairs);
  return rep;
}

}  // namespace fou2
