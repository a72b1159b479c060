// Command-line driver for the sweeps, the Sachs benchmark, landscape
// certification and one-shot solves.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nomad/experiments.hpp"
#include "nomad/io.hpp"
#include "nomad/solver.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::size_t> jobs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool config_required) {
  auto* opt = cmd->add_option("--config", o.config, "JSON experiment config");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--jobs", o.jobs, "concurrent trials")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
  cmd->add_option("--out", o.out, "output directory (overrides the config)");
  cmd->add_flag("--quiet", o.quiet, "suppress per-trial progress");
}

nomad::ExperimentConfig load(const CommonOptions& o) {
  nomad::ExperimentConfig cfg = nomad::load_experiment_config(o.config);
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.out) cfg.output_path = *o.out;
  cfg.validate();
  return cfg;
}

int run_sweep_command(const CommonOptions& o, nomad::ExperimentKind expected) {
  nomad::ExperimentConfig cfg = load(o);
  if (cfg.experiment != expected) {
    throw nomad::ConfigError("config is for " + nomad::to_string(cfg.experiment));
  }
  std::mutex io;
  std::size_t done = 0;
  const auto rows = nomad::run_sweep(cfg, [&](const nomad::ResultRow& r) {
    std::lock_guard<std::mutex> lock(io);
    ++done;
    if (o.quiet) return;
    std::fprintf(stderr, "[%zu] %s value=%g trial %zu: %s nerr=%.3g shd=%zu outer=%zu\n", done,
                 r.variant.c_str(), r.sweep_value, r.trial,
                 r.failed ? "FAILED" : "ok", r.metrics.nerr, r.metrics.shd, r.outer_iters);
  });
  std::printf("%-14s %10s %6s %5s %12s %12s %12s %6s\n", "variant", "value", "trials", "fail",
              "nerr_med", "shd_norm_med", "f1_med", "outer");
  for (const auto& a : nomad::aggregate(rows)) {
    std::printf("%-14s %10g %6zu %5zu %12.4g %12.4g %12.4g %6zu\n", a.variant.c_str(),
                a.sweep_value, a.trials, a.excluded, a.nerr.median, a.shd_normalized.median,
                a.f1.median, a.max_outer_iters);
  }
  std::printf("results written to %s\n", cfg.output_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-negative DAG learning with a log-determinant acyclicity constraint"};
  app.require_subcommand(1);

  CommonOptions sample, size, noise, sachs, land, one;
  add_common(app.add_subcommand("sample-sweep", "error versus sample count"), sample, true);
  add_common(app.add_subcommand("size-sweep", "support recovery versus graph size"), size, true);
  add_common(app.add_subcommand("noise-sweep", "error versus noise variance"), noise, true);

  auto* sachs_cmd = app.add_subcommand("sachs", "protein-signaling benchmark");
  add_common(sachs_cmd, sachs, true);
  std::optional<std::string> sachs_data, sachs_ref, sachs_std;
  sachs_cmd->add_option("--data", sachs_data, "sample CSV (n x d with header)");
  sachs_cmd->add_option("--reference", sachs_ref, "reference DAG (edge list or matrix)");
  sachs_cmd->add_option("--standardize", sachs_std, "none|center|zscore")
      ->check(CLI::IsMember({"none", "center", "zscore"}));

  auto* land_cmd = app.add_subcommand("landscape-cert", "population landscape checks");
  add_common(land_cmd, land, true);

  auto* solve_cmd = app.add_subcommand("solve", "learn a DAG from one dataset");
  add_common(solve_cmd, one, false);
  std::string solve_data;
  std::string solve_std = "none";
  std::optional<double> solve_alpha, solve_tau;
  solve_cmd->add_option("--data", solve_data, "sample CSV (n x d, optional header)")
      ->required()
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--standardize", solve_std, "none|center|zscore")
      ->check(CLI::IsMember({"none", "center", "zscore"}));
  solve_cmd->add_option("--alpha", solve_alpha, "sparsity weight");
  solve_cmd->add_option("--tau", solve_tau, "edge threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("sample-sweep"))
      return run_sweep_command(sample, nomad::ExperimentKind::SampleSweep);
    if (app.got_subcommand("size-sweep"))
      return run_sweep_command(size, nomad::ExperimentKind::SizeSweep);
    if (app.got_subcommand("noise-sweep"))
      return run_sweep_command(noise, nomad::ExperimentKind::NoiseSweep);

    if (app.got_subcommand("sachs")) {
      nomad::ExperimentConfig cfg = load(sachs);
      if (sachs_data) cfg.sachs.data_path = *sachs_data;
      if (sachs_ref) cfg.sachs.reference_path = *sachs_ref;
      if (sachs_std) cfg.sachs.standardize = nomad::parse_standardize(*sachs_std);
      const auto r = nomad::run_sachs(cfg);
      nomad::write_sachs_outputs(cfg.output_path, r, cfg);
      std::cout << nomad::sachs_report(r, cfg).dump(2) << '\n';
      return 0;
    }

    if (app.got_subcommand("landscape-cert")) {
      const nomad::ExperimentConfig cfg = load(land);
      const nomad::Json report = nomad::run_landscape_cert(cfg);
      std::filesystem::create_directories(cfg.output_path);
      const std::string path = cfg.output_path + "/landscape_report.json";
      std::ofstream(path) << report.dump(2) << '\n';
      std::cout << report["summary"].dump(2) << "\nreport written to " << path << '\n';
      return report["passed"].get<bool>() ? 0 : 2;
    }

    if (app.got_subcommand("solve")) {
      nomad::SolverConfig solver;
      std::string out_dir = one.out.value_or("results");
      if (!one.config.empty()) {
        std::ifstream in(one.config);
        if (!in) throw nomad::ConfigError("cannot open config '" + one.config + "'");
        const nomad::Json j = nomad::Json::parse(in);
        solver = j.contains("experiment") ? nomad::parse_experiment_config(j).solver
                                          : nomad::parse_solver_config(j);
      }
      if (solve_alpha) solver.alpha = *solve_alpha;
      if (solve_tau) solver.threshold_tau = *solve_tau;
      nomad::Dataset ds = nomad::read_dataset_csv(solve_data);
      nomad::standardize(ds, nomad::parse_standardize(solve_std));
      const nomad::SolveResult res = nomad::solve(ds, solver);
      std::filesystem::create_directories(out_dir);
      nomad::write_matrix_csv(out_dir + "/w_raw.csv", res.w_raw.matrix(), ds.names);
      nomad::write_matrix_csv(out_dir + "/w_dag.csv", res.w_dag.matrix(), ds.names);
      nomad::write_edge_list_csv(out_dir + "/edges.csv", res.w_dag, ds.names);
      nomad::Json summary = {{"d", ds.d()},
                             {"n", ds.n()},
                             {"converged", res.converged},
                             {"outer_iters", res.outer_iters},
                             {"final_h", res.final_h},
                             {"alpha", res.alpha},
                             {"edges", res.w_dag.edge_count()},
                             {"wall_time", res.wall_time},
                             {"solver", nomad::solver_config_to_json(solver)}};
      std::ofstream(out_dir + "/summary.json") << summary.dump(2) << '\n';
      std::cout << summary.dump(2) << '\n';
      return res.converged ? 0 : 3;
    }
  } catch (const nomad::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: invalid JSON: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
