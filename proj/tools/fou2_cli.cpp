// Command-line front door: compute the analytic constants, emit the
// kernel-norm diagnostic tables, run Monte Carlo sweeps of the normalized
// estimation error, and produce the rate report as CSV/JSON.
//
// Subcommands: constants | lemmas | psi | simulate | berry-esseen
// Exit codes:  0 success, 1 validation failure, 2 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "fou2/analytic.hpp"
#include "fou2/chaos.hpp"
#include "fou2/experiment.hpp"
#include "fou2/gram.hpp"
#include "fou2/grid.hpp"
#include "fou2/io.hpp"
#include "fou2/mc.hpp"
#include "fou2/params.hpp"

namespace {

using nlohmann::json;

struct Options {
  double alpha = 1.0;
  double hurst = 0.75;
  std::vector<double> t_list{5.0, 10.0, 20.0, 40.0};
  double cells_per_unit = 12.8;
  int cells_cap = 4096;
  std::int64_t samples = 100000;
  std::uint64_t seed = 42;
  std::string out_dir = ".";
  std::string psi2_variant = "printed";
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double truncation = 0.0;  // 0 = derive from the tail bound
  int threads = 0;          // 0 = auto
};

void attach_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--alpha", o.alpha, "Drift parameter alpha > 0");
  cmd->add_option("--hurst", o.hurst, "Hurst index in (1/2, 1)");
  cmd->add_option("--t-list", o.t_list, "Horizons T, increasing")
      ->delimiter(',');
  cmd->add_option("--cells-per-unit", o.cells_per_unit,
                  "Grid cells per unit time");
  cmd->add_option("--cells-cap", o.cells_cap, "Upper bound on cell count");
  cmd->add_option("--samples", o.samples, "Monte Carlo samples per horizon");
  cmd->add_option("--seed", o.seed, "Base seed of the counter-based RNG");
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
  cmd->add_option("--psi2-variant", o.psi2_variant,
                  "psi2 formula variant: printed | squared")
      ->check(CLI::IsMember({"printed", "squared"}));
  cmd->add_option("--rel-tol", o.rel_tol, "Quadrature relative tolerance");
  cmd->add_option("--abs-tol", o.abs_tol, "Quadrature absolute tolerance");
  cmd->add_option("--truncation", o.truncation,
                  "Cutoff for (0,inf) integrals (0 = derive from tail bound)");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = auto)");
  cmd->set_config("--config", "",
                  "key=value config file; command-line flags take precedence");
}

struct Validated {
  fou2::ModelParams params;
  fou2::QuadratureSpec quad;
  fou2::ResolutionPolicy policy;
  std::filesystem::path out_dir;
};

Validated validate(const Options& o) {
  fou2::ModelParams p(o.alpha, o.hurst);
  fou2::QuadratureSpec q;
  q.rel_tol = o.rel_tol;
  q.abs_tol = o.abs_tol;
  q.truncation_length =
      (o.truncation > 0.0) ? o.truncation : fou2::default_truncation(p, o.abs_tol);
  q.validate();
  if (o.t_list.empty())
    throw std::invalid_argument("t-list must not be empty");
  for (std::size_t i = 0; i < o.t_list.size(); ++i) {
    if (!(o.t_list[i] > 0.0))
      throw std::invalid_argument("t-list entries must be > 0");
    if (i > 0 && !(o.t_list[i] > o.t_list[i - 1]))
      throw std::invalid_argument("t-list must be strictly increasing");
  }
  if (!(o.cells_per_unit > 0.0))
    throw std::invalid_argument("cells-per-unit must be > 0");
  if (o.cells_cap < 2) throw std::invalid_argument("cells-cap must be >= 2");
  if (o.samples < 100)
    throw std::invalid_argument("samples must be >= 100");
  fou2::ResolutionPolicy policy;
  policy.cells_per_unit = o.cells_per_unit;
  policy.cap = o.cells_cap;
  std::filesystem::path dir(o.out_dir);
  std::filesystem::create_directories(dir);
  return Validated{p, q, policy, dir};
}

std::string t_tag(double T) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", T);
  return buf;
}

json ks_json(const fou2::KsReport& ks) {
  return json{{"ks_distance", ks.ks_distance},
              {"dkw_radius", ks.dkw_radius},
              {"n_samples", ks.n_samples},
              {"target", ks.target}};
}

json fit_json(const fou2::RateFit& fit) {
  json pairs = json::array();
  for (const auto& [t, v] : fit.pairs) pairs.push_back(json::array({t, v}));
  return json{{"pairs", pairs},
              {"slope", fit.slope},
              {"intercept", fit.intercept},
              {"r_squared", fit.r_squared}};
}

int cmd_constants(const Options& o) {
  const Validated v = validate(o);
  const fou2::ConstantsReport rep = fou2::sigma_const(v.params, v.quad);
  json j{{"alpha", o.alpha},
         {"hurst", o.hurst},
         {"sigma", rep.sigma},
         {"rho", rep.rho},
         {"triple_integral", rep.triple_integral},
         {"estimated_error", rep.estimated_error}};
  json bts = json::array();
  for (double T : o.t_list)
    bts.push_back(json{{"T", T}, {"value", fou2::b_T_analytic(T, v.params, v.quad)}});
  j["b_T"] = bts;
  j["quadrature"] = json{{"rel_tol", v.quad.rel_tol},
                         {"abs_tol", v.quad.abs_tol},
                         {"truncation_length", v.quad.truncation_length}};
  const std::string text = j.dump(2) + "\n";
  fou2::atomic_write_file(v.out_dir / "constants.json", text);
  std::cout << text;
  return 0;
}

fou2::LemmaTable make_table(const Options& o, const Validated& v) {
  return fou2::lemma_tables(o.t_list, v.params, v.policy, v.quad);
}

int cmd_lemmas(const Options& o) {
  const Validated v = validate(o);
  const fou2::LemmaTable tab = make_table(o, v);
  fou2::atomic_write_file(v.out_dir / "lemmas.csv",
                          fou2::diagnostics_csv(tab.rows));
  json j{{"alpha", o.alpha}, {"hurst", o.hurst}, {"t_list", o.t_list}};
  j["slopes"] = tab.slopes;
  const std::string text = j.dump(2) + "\n";
  fou2::atomic_write_file(v.out_dir / "lemma_slopes.json", text);
  std::cout << text;
  return 0;
}

int cmd_psi(const Options& o) {
  const Validated v = validate(o);
  const fou2::LemmaTable tab = make_table(o, v);
  fou2::atomic_write_file(v.out_dir / "psi.csv",
                          fou2::diagnostics_csv(tab.rows));
  auto monotone = [&](auto&& get) {
    for (std::size_t i = 1; i < tab.rows.size(); ++i)
      if (!(get(tab.rows[i]) < get(tab.rows[i - 1]))) return false;
    return true;
  };
  json j{{"alpha", o.alpha},
         {"hurst", o.hurst},
         {"t_list", o.t_list},
         {"psi2_variant", o.psi2_variant}};
  j["monotone_decreasing"] =
      json{{"psi1", monotone([](const fou2::ChaosDiagnostics& r) { return r.psi1; })},
           {"psi2", monotone([](const fou2::ChaosDiagnostics& r) { return r.psi2; })},
           {"psi2_variant",
            monotone([](const fou2::ChaosDiagnostics& r) { return r.psi2_variant; })},
           {"psi3", monotone([](const fou2::ChaosDiagnostics& r) { return r.psi3; })}};
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < tab.rows.size(); ++i) {
    const double val = tab.rows[i].psi1 * std::sqrt(tab.rows[i].T);
    lo = (i == 0) ? val : std::min(lo, val);
    hi = (i == 0) ? val : std::max(hi, val);
  }
  j["psi1_sqrt_T_ratio"] = (lo > 0.0) ? hi / lo : 0.0;
  const std::string text = j.dump(2) + "\n";
  fou2::atomic_write_file(v.out_dir / "psi_summary.json", text);
  std::cout << text;
  return 0;
}

int cmd_simulate(const Options& o) {
  const Validated v = validate(o);
  const fou2::ConstantsReport consts = fou2::sigma_const(v.params, v.quad);
  for (double T : o.t_list) {
    const fou2::TimeGrid grid = fou2::build_grid(T, v.policy.n_for(T));
    const fou2::StatisticSampler sampler = fou2::StatisticSampler::build(
        grid, v.params, v.quad, consts.sigma, consts.rho);
    const fou2::McRun run = fou2::mc_run(sampler, o.seed, o.samples, o.threads);
    std::string csv = "index,value\n";
    char buf[64];
    for (std::size_t i = 0; i < run.samples.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, run.samples[i]);
      csv += buf;
    }
    const std::string tag = t_tag(T);
    fou2::atomic_write_file(v.out_dir / ("samples_T" + tag + ".csv"), csv);
    const fou2::KsReport ks = fou2::kolmogorov_distance(run.samples);
    fou2::atomic_write_file(v.out_dir / ("ks_T" + tag + ".json"),
                            ks_json(ks).dump(2) + "\n");
    std::cout << "T=" << tag << " n=" << grid.n
              << " ks=" << fou2::format_double(ks.ks_distance) << "\n";
  }
  return 0;
}

int cmd_berry_esseen(const Options& o) {
  const Validated v = validate(o);
  if (o.t_list.size() < 3)
    throw std::invalid_argument("berry-esseen needs at least 3 horizons");
  json report{{"alpha", o.alpha},
              {"hurst", o.hurst},
              {"seed", o.seed},
              {"samples", o.samples},
              {"t_list", o.t_list}};
  json entries = json::array();
  std::string csv = "T,n,ks_distance,dkw_radius\n";
  std::vector<std::pair<double, double>> pairs;
  try {
    const fou2::ConstantsReport consts = fou2::sigma_const(v.params, v.quad);
    report["sigma"] = consts.sigma;
    report["rho"] = consts.rho;
    for (double T : o.t_list) {
      report["failed_at"] = T;  // overwritten on success, erased at the end
      const fou2::TimeGrid grid = fou2::build_grid(T, v.policy.n_for(T));
      const fou2::StatisticSampler sampler = fou2::StatisticSampler::build(
          grid, v.params, v.quad, consts.sigma, consts.rho);
      const fou2::McRun run =
          fou2::mc_run(sampler, o.seed, o.samples, o.threads);
      const fou2::KsReport ks = fou2::kolmogorov_distance(run.samples);
      entries.push_back(json{{"T", T}, {"n", grid.n}, {"ks", ks_json(ks)}});
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%.17g,%d,%.17g,%.17g\n", T, grid.n,
                    ks.ks_distance, ks.dkw_radius);
      csv += buf;
      pairs.emplace_back(T, ks.ks_distance);
    }
    report.erase("failed_at");
    report["entries"] = entries;
    report["fit"] = fit_json(fou2::rate_regression(pairs));
  } catch (...) {
    report["entries"] = entries;  // keep what finished
    fou2::atomic_write_file(v.out_dir / "berry_esseen.json",
                            report.dump(2) + "\n");
    fou2::atomic_write_file(v.out_dir / "berry_esseen.csv", csv);
    throw;
  }
  const std::string text = report.dump(2) + "\n";
  fou2::atomic_write_file(v.out_dir / "berry_esseen.json", text);
  fou2::atomic_write_file(v.out_dir / "berry_esseen.csv", csv);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Second-kind fractional Ornstein-Uhlenbeck drift estimation lab"};
  app.require_subcommand(1);

  CLI::App* c_constants =
      app.add_subcommand("constants", "Analytic constants sigma, rho, b_T");
  CLI::App* c_lemmas =
      app.add_subcommand("lemmas", "Kernel-norm table and log-log slopes");
  CLI::App* c_psi =
      app.add_subcommand("psi", "psi bound table and monotonicity summary");
  CLI::App* c_simulate =
      app.add_subcommand("simulate", "Sample dumps and KS reports per horizon");
  CLI::App* c_be = app.add_subcommand(
      "berry-esseen", "Kolmogorov-distance rate experiment over the horizons");
  for (CLI::App* sub : {c_constants, c_lemmas, c_psi, c_simulate, c_be})
    attach_common(sub, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (c_constants->parsed()) return cmd_constants(o);
    if (c_lemmas->parsed()) return cmd_lemmas(o);
    if (c_psi->parsed()) return cmd_psi(o);
    if (c_simulate->parsed()) return cmd_simulate(o);
    if (c_be->parsed()) return cmd_berry_esseen(o);
  } catch (const fou2::QuadratureError& e) {
    nlohmann::json diag{{"error", "quadrature"},
                        {"message", e.what()},
                        {"last_estimate", e.last_estimate},
                        {"previous_estimate", e.previous_estimate}};
    std::cerr << diag.dump(2) << "\n";
    return 2;
  } catch (const fou2::FactorizationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fou2::DegenerateSampleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
