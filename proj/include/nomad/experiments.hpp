#ifndef NOMAD_EXPERIMENTS_HPP
#define NOMAD_EXPERIMENTS_HPP

// Experiment drivers: Monte Carlo sweeps, the Sachs benchmark and the
// landscape certification report, with JSON configs and CSV/JSON outputs.

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "nomad/errors.hpp"
#include "nomad/graphs.hpp"
#include "nomad/io.hpp"
#include "nomad/landscape.hpp"
#include "nomad/metrics.hpp"
#include "nomad/random.hpp"
#include "nomad/sem.hpp"
#include "nomad/solver.hpp"

namespace nomad {

using Json = nlohmann::ordered_json;

enum class ExperimentKind { SampleSweep, SizeSweep, NoiseSweep, Sachs, LandscapeCert };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::SampleSweep: return "sample-sweep";
    case ExperimentKind::SizeSweep: return "size-sweep";
    case ExperimentKind::NoiseSweep: return "noise-sweep";
    case ExperimentKind::Sachs: return "sachs";
    case ExperimentKind::LandscapeCert: return "landscape-cert";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::SampleSweep, ExperimentKind::SizeSweep,
                 ExperimentKind::NoiseSweep, ExperimentKind::Sachs,
                 ExperimentKind::LandscapeCert}) {
    if (s == to_string(k)) return k;
  }
  if (s == "SampleSweep") return ExperimentKind::SampleSweep;
  if (s == "SizeSweep") return ExperimentKind::SizeSweep;
  if (s == "NoiseSweep") return ExperimentKind::NoiseSweep;
  if (s == "Sachs") return ExperimentKind::Sachs;
  if (s == "LandscapeCert") return ExperimentKind::LandscapeCert;
  throw ConfigError("unknown experiment '" + s + "'");
}

/// Settings of the landscape certification run for each (d, seed).
struct LandscapeOptions {
  std::vector<double> lambdas = {2.0, 3.0};
  std::vector<double> cs = {0.5, 2.0};
  std::size_t bound_samples = 10000;
  std::size_t descent_inits = 20;
  std::size_t kkt_candidates = 10;
  /// Added to every off-diagonal entry of the population covariance; a
  /// nonzero value is a negative control that must make checks fail.
  double sigma_perturbation = 0.0;
};

struct SachsOptions {
  std::string data_path = "data/sachs/sachs_cd3cd28.csv";
  std::string reference_path = "data/sachs/reference_edges.csv";
  Standardize standardize = Standardize::ZScore;
  /// Required data shape; 0 disables the check.
  std::size_t expected_rows = 853;
  std::size_t expected_cols = 11;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::SampleSweep;
  /// Sample counts, node counts, noise variances or node counts (landscape).
  std::vector<double> grid;
  std::size_t trials = 1;
  SolverConfig solver;
  DagSpec dag;
  std::string output_path = "results";
  std::uint64_t master_seed = 0;
  /// Samples per trial for the size and noise sweeps.
  std::size_t n = 1000;
  /// Noise variance for the sample and size sweeps.
  double noise_variance = 1.0;
  std::vector<GraphFamily> families = {GraphFamily::ErdosRenyi, GraphFamily::ScaleFree};
  SachsOptions sachs;
  LandscapeOptions landscape;
  std::size_t jobs = 1;

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (experiment != ExperimentKind::Sachs && grid.empty()) {
      throw ConfigError("grid must not be empty");
    }
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (output_path.empty()) throw ConfigError("output_path must not be empty");
    solver.validate();
    for (double g : grid) {
      if (!std::isfinite(g)) throw ConfigError("grid values must be finite");
      switch (experiment) {
        case ExperimentKind::SampleSweep:
        case ExperimentKind::SizeSweep:
        case ExperimentKind::LandscapeCert:
          if (g < 1.0 || g != std::floor(g)) {
            throw ConfigError("grid values must be positive integers");
          }
          break;
        case ExperimentKind::NoiseSweep:
          if (!(g > 0.0)) throw ConfigError("noise variances must be > 0");
          break;
        case ExperimentKind::Sachs: break;
      }
    }
    if (n < 1) throw ConfigError("n must be >= 1");
    if (!(noise_variance > 0.0)) throw ConfigError("noise_variance must be > 0");
    if (experiment == ExperimentKind::SizeSweep && families.empty()) {
      throw ConfigError("families must not be empty");
    }
  }
};

// ---------------------------------------------------------------------------
// JSON config parsing. Unknown keys are rejected so typos surface early.

namespace detail {

template <typename F>
void for_each_key(const Json& j, const char* where, const std::vector<std::string>& allowed,
                  F&& f) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
    f(it.key(), it.value());
  }
}

template <typename T>
T get_as(const Json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value for '" + key + "'");
  }
}

}  // namespace detail

inline SolverConfig parse_solver_config(const Json& j, SolverConfig cfg = {}) {
  detail::for_each_key(
      j, "solver",
      {"alpha", "lambda0", "c0", "beta", "gamma", "eta0", "inner_tol", "inner_max_iters",
       "outer_max_iters", "h_tol", "acyclicity", "s", "inner_method", "threshold_tau",
       "known_sigma2", "refit_support"},
      [&](const std::string& k, const Json& v) {
        using detail::get_as;
        if (k == "alpha") {
          if (v.is_null()) cfg.alpha.reset();
          else cfg.alpha = get_as<double>(v, k);
        }
        if (k == "lambda0") cfg.lambda0 = get_as<double>(v, k);
        if (k == "c0") cfg.c0 = get_as<double>(v, k);
        if (k == "beta") cfg.beta = get_as<double>(v, k);
        if (k == "gamma") cfg.gamma = get_as<double>(v, k);
        if (k == "eta0") cfg.eta0 = get_as<double>(v, k);
        if (k == "inner_tol") cfg.inner_tol = get_as<double>(v, k);
        if (k == "inner_max_iters") cfg.inner_max_iters = get_as<std::size_t>(v, k);
        if (k == "outer_max_iters") cfg.outer_max_iters = get_as<std::size_t>(v, k);
        if (k == "h_tol") cfg.h_tol = get_as<double>(v, k);
        if (k == "threshold_tau") cfg.threshold_tau = get_as<double>(v, k);
        if (k == "refit_support") cfg.refit_support = get_as<bool>(v, k);
        if (k == "known_sigma2") {
          if (v.is_null()) cfg.known_sigma2.reset();
          else cfg.known_sigma2 = get_as<double>(v, k);
        }
        if (k == "acyclicity") {
          const auto name = get_as<std::string>(v, k);
          if (name == "logdet") cfg.acyclicity.type = AcyclicityKind::Type::LogDet;
          else if (name == "matexp") cfg.acyclicity = AcyclicityKind::mat_exp();
          else throw ConfigError("acyclicity must be logdet or matexp");
        }
        if (k == "s") cfg.acyclicity.s = get_as<double>(v, k);
        if (k == "inner_method") {
          switch (parse_inner_method(get_as<std::string>(v, k))) {
            case InnerMethod::ProjectedNewton: cfg.newton_scaling = true; break;
            case InnerMethod::Fista:
              cfg.newton_scaling = false;
              cfg.use_fista = true;
              break;
            case InnerMethod::ProjectedGradient:
              cfg.newton_scaling = false;
              cfg.use_fista = false;
              break;
          }
        }
      });
  cfg.validate();
  return cfg;
}

inline Json solver_config_to_json(const SolverConfig& cfg) {
  Json j;
  j["alpha"] = cfg.alpha ? Json(*cfg.alpha) : Json(nullptr);
  j["lambda0"] = cfg.lambda0;
  j["c0"] = cfg.c0;
  j["beta"] = cfg.beta;
  j["gamma"] = cfg.gamma;
  j["eta0"] = cfg.eta0;
  j["inner_tol"] = cfg.inner_tol;
  j["inner_max_iters"] = cfg.inner_max_iters;
  j["outer_max_iters"] = cfg.outer_max_iters;
  j["h_tol"] = cfg.h_tol;
  j["acyclicity"] = to_string(cfg.acyclicity);
  j["s"] = cfg.acyclicity.s;
  j["inner_method"] = to_string(cfg.inner_method());
  j["threshold_tau"] = cfg.threshold_tau;
  j["known_sigma2"] = cfg.known_sigma2 ? Json(*cfg.known_sigma2) : Json(nullptr);
  j["refit_support"] = cfg.refit_support;
  return j;
}

inline DagSpec parse_dag_spec(const Json& j, DagSpec spec = {}) {
  detail::for_each_key(j, "dag", {"d", "family", "avg_degree", "weight_low", "weight_high"},
                       [&](const std::string& k, const Json& v) {
                         using detail::get_as;
                         if (k == "d") spec.d = get_as<std::size_t>(v, k);
                         if (k == "family") spec.family = parse_graph_family(get_as<std::string>(v, k));
                         if (k == "avg_degree") spec.avg_degree = get_as<double>(v, k);
                         if (k == "weight_low") spec.weight_low = get_as<double>(v, k);
                         if (k == "weight_high") spec.weight_high = get_as<double>(v, k);
                       });
  return spec;
}

inline ExperimentConfig parse_experiment_config(const Json& j) {
  ExperimentConfig cfg;
  if (!j.is_object() || !j.contains("experiment")) {
    throw ConfigError("config needs an 'experiment' field");
  }
  detail::for_each_key(
      j, "config",
      {"experiment", "grid", "trials", "solver", "dag", "output_path", "master_seed", "n",
       "noise_variance", "families", "sachs", "landscape", "jobs"},
      [&](const std::string& k, const Json& v) {
        using detail::get_as;
        if (k == "experiment") cfg.experiment = parse_experiment_kind(get_as<std::string>(v, k));
        if (k == "grid") cfg.grid = get_as<std::vector<double>>(v, k);
        if (k == "trials") cfg.trials = get_as<std::size_t>(v, k);
        if (k == "solver") cfg.solver = parse_solver_config(v);
        if (k == "dag") cfg.dag = parse_dag_spec(v);
        if (k == "output_path") cfg.output_path = get_as<std::string>(v, k);
        if (k == "master_seed") cfg.master_seed = get_as<std::uint64_t>(v, k);
        if (k == "n") cfg.n = get_as<std::size_t>(v, k);
        if (k == "noise_variance") cfg.noise_variance = get_as<double>(v, k);
        if (k == "jobs") cfg.jobs = get_as<std::size_t>(v, k);
        if (k == "families") {
          cfg.families.clear();
          for (const auto& f : get_as<std::vector<std::string>>(v, k))
            cfg.families.push_back(parse_graph_family(f));
        }
        if (k == "sachs") {
          detail::for_each_key(v, "sachs",
                               {"data_path", "reference_path", "standardize", "expected_rows",
                                "expected_cols"},
                               [&](const std::string& sk, const Json& sv) {
                                 auto& s = cfg.sachs;
                                 if (sk == "data_path") s.data_path = get_as<std::string>(sv, sk);
                                 if (sk == "reference_path")
                                   s.reference_path = get_as<std::string>(sv, sk);
                                 if (sk == "standardize")
                                   s.standardize = parse_standardize(get_as<std::string>(sv, sk));
                                 if (sk == "expected_rows")
                                   s.expected_rows = get_as<std::size_t>(sv, sk);
                                 if (sk == "expected_cols")
                                   s.expected_cols = get_as<std::size_t>(sv, sk);
                               });
        }
        if (k == "landscape") {
          detail::for_each_key(v, "landscape",
                               {"lambdas", "cs", "bound_samples", "descent_inits",
                                "kkt_candidates", "sigma_perturbation"},
                               [&](const std::string& lk, const Json& lv) {
                                 auto& l = cfg.landscape;
                                 if (lk == "lambdas") l.lambdas = get_as<std::vector<double>>(lv, lk);
                                 if (lk == "cs") l.cs = get_as<std::vector<double>>(lv, lk);
                                 if (lk == "bound_samples")
                                   l.bound_samples = get_as<std::size_t>(lv, lk);
                                 if (lk == "descent_inits")
                                   l.descent_inits = get_as<std::size_t>(lv, lk);
                                 if (lk == "kkt_candidates")
                                   l.kkt_candidates = get_as<std::size_t>(lv, lk);
                                 if (lk == "sigma_perturbation")
                                   l.sigma_perturbation = get_as<double>(lv, lk);
                               });
        }
      });
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
  return parse_experiment_config(j);
}

// ---------------------------------------------------------------------------
// Results and aggregation.

struct ResultRow {
  std::string experiment;
  /// Curve label, e.g. the graph family or solver variant.
  std::string variant;
  double sweep_value = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t d = 0;
  std::size_t n = 0;
  MetricsReport metrics;
  bool converged = false;
  std::size_t outer_iters = 0;
  double final_h = 0.0;
  bool failed = false;
  std::string error;
};

/// Column order of the per-row CSV.
inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {
      "experiment", "variant",   "sweep_value", "trial", "seed",      "d",
      "n",          "nerr",      "shd",         "shd_normalized",     "tpr",
      "fdr",        "f1",        "wall_time",   "converged",          "outer_iters",
      "final_h",    "failed",    "error"};
  return cols;
}

/// Linear-interpolation percentile (q in [0, 1]) of a non-empty sample.
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw ConfigError("percentile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Quartiles {
  double median = std::nan("");
  double p25 = std::nan("");
  double p75 = std::nan("");
};

inline Quartiles quartiles(const std::vector<double>& v) {
  if (v.empty()) return {};
  return {percentile(v, 0.5), percentile(v, 0.25), percentile(v, 0.75)};
}

struct AggregateRow {
  std::string experiment;
  std::string variant;
  double sweep_value = 0.0;
  std::size_t trials = 0;
  /// Failed trials, excluded from the statistics below.
  std::size_t excluded = 0;
  std::size_t converged = 0;
  Quartiles nerr, shd_normalized, tpr, fdr, f1, outer_iters;
  std::size_t max_outer_iters = 0;
  double max_final_h = 0.0;
};

/// Groups rows by (variant, sweep value) in first-appearance order.
inline std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
  std::vector<AggregateRow> out;
  std::map<std::pair<std::string, double>, std::size_t> index;
  std::vector<std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.variant, r.sweep_value);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      AggregateRow a;
      a.experiment = r.experiment;
      a.variant = r.variant;
      a.sweep_value = r.sweep_value;
      out.push_back(a);
      groups.emplace_back();
    }
    groups[it->second].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    AggregateRow& a = out[g];
    std::vector<double> nerr_v, shd_v, tpr_v, fdr_v, f1_v, outer_v;
    for (const ResultRow* r : groups[g]) {
      ++a.trials;
      if (r->failed) {
        ++a.excluded;
        continue;
      }
      a.converged += r->converged ? 1 : 0;
      nerr_v.push_back(r->metrics.nerr);
      shd_v.push_back(r->metrics.shd_normalized);
      tpr_v.push_back(r->metrics.tpr);
      fdr_v.push_back(r->metrics.fdr);
      f1_v.push_back(r->metrics.f1);
      outer_v.push_back(static_cast<double>(r->outer_iters));
      a.max_outer_iters = std::max(a.max_outer_iters, r->outer_iters);
      a.max_final_h = std::max(a.max_final_h, r->final_h);
    }
    a.nerr = quartiles(nerr_v);
    a.shd_normalized = quartiles(shd_v);
    a.tpr = quartiles(tpr_v);
    a.fdr = quartiles(fdr_v);
    a.f1 = quartiles(f1_v);
    a.outer_iters = quartiles(outer_v);
  }
  return out;
}

inline void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  auto out = detail::open_output(path);
  const auto& cols = result_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << r.experiment << ',' << r.variant << ',' << r.sweep_value << ',' << r.trial << ','
        << r.seed << ',' << r.d << ',' << r.n << ',' << r.metrics.nerr << ',' << r.metrics.shd
        << ',' << r.metrics.shd_normalized << ',' << r.metrics.tpr << ',' << r.metrics.fdr << ','
        << r.metrics.f1 << ',' << r.metrics.wall_time << ',' << (r.converged ? 1 : 0) << ','
        << r.outer_iters << ',' << r.final_h << ',' << (r.failed ? 1 : 0) << ',' << err << '\n';
  }
}

inline std::vector<ResultRow> read_results_csv(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  std::vector<ResultRow> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (detail::trim(line).empty()) continue;
    auto c = detail::split_csv_line(line);
    c.resize(result_columns().size());
    ResultRow r;
    try {
      r.experiment = c[0];
      r.variant = c[1];
      r.sweep_value = std::stod(c[2]);
      r.trial = std::stoull(c[3]);
      r.seed = std::stoull(c[4]);
      r.d = std::stoull(c[5]);
      r.n = std::stoull(c[6]);
      r.metrics.nerr = std::stod(c[7]);
      r.metrics.shd = std::stoull(c[8]);
      r.metrics.shd_normalized = std::stod(c[9]);
      r.metrics.tpr = std::stod(c[10]);
      r.metrics.fdr = std::stod(c[11]);
      r.metrics.f1 = std::stod(c[12]);
      r.metrics.wall_time = std::stod(c[13]);
      r.converged = c[14] == "1";
      r.outer_iters = std::stoull(c[15]);
      r.final_h = std::stod(c[16]);
      r.failed = c[17] == "1";
      r.error = c[18];
    } catch (const std::exception&) {
      throw DataError("malformed results row in '" + path + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows) {
  auto out = detail::open_output(path);
  out << "experiment,variant,sweep_value,trials,excluded,converged";
  for (const char* m : {"nerr", "shd_normalized", "tpr", "fdr", "f1", "outer_iters"})
    out << ',' << m << "_median," << m << "_p25," << m << "_p75";
  out << ",max_outer_iters,max_final_h\n";
  for (const auto& a : rows) {
    out << a.experiment << ',' << a.variant << ',' << a.sweep_value << ',' << a.trials << ','
        << a.excluded << ',' << a.converged;
    for (const Quartiles* q : {&a.nerr, &a.shd_normalized, &a.tpr, &a.fdr, &a.f1, &a.outer_iters})
      out << ',' << q->median << ',' << q->p25 << ',' << q->p75;
    out << ',' << a.max_outer_iters << ',' << a.max_final_h << '\n';
  }
}

/// Per-row CSV, one aggregate CSV, and one aggregate CSV per curve.
inline void write_sweep_outputs(const std::string& dir, const std::string& experiment,
                                const std::vector<ResultRow>& rows) {
  std::filesystem::create_directories(dir);
  write_results_csv(dir + "/" + experiment + "_rows.csv", rows);
  const auto agg = aggregate(rows);
  write_aggregate_csv(dir + "/" + experiment + "_aggregate.csv", agg);
  std::map<std::string, std::vector<AggregateRow>> curves;
  for (const auto& a : agg) curves[a.variant].push_back(a);
  for (const auto& [variant, curve] : curves)
    write_aggregate_csv(dir + "/" + experiment + "_" + variant + ".csv", curve);
}

// ---------------------------------------------------------------------------
// Parallel trial execution.

/// Runs task(k) for k in [0, count) on up to `jobs` threads. Results land in
/// slot k, so output order does not depend on scheduling. `progress` is
/// called under a lock after every completed task.
template <typename T>
std::vector<T> run_parallel(std::size_t count, std::size_t jobs,
                            const std::function<T(std::size_t)>& task,
                            const std::function<void(std::size_t, const T&)>& progress = {}) {
  std::vector<T> out(count);
  std::atomic<std::size_t> next{0};
  std::mutex collector;
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      T result = task(k);
      std::lock_guard<std::mutex> lock(collector);
      out[k] = std::move(result);
      if (progress) progress(k, out[k]);
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, count));
  if (threads == 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return out;
}

/// Seed of one trial: depends only on the master seed, the experiment id,
/// the sweep value and the trial index.
inline std::uint64_t trial_seed(std::uint64_t master_seed, const std::string& experiment_id,
                                double sweep_value, std::size_t trial) {
  return derive_seed({master_seed, hash_label(experiment_id),
                      std::bit_cast<std::uint64_t>(sweep_value), trial});
}

struct SyntheticTrial {
  DagSpec dag;
  std::size_t n = 1000;
  double noise_variance = 1.0;
  std::uint64_t seed = 0;
};

/// Generates the DAG and data of one trial and fills `row` from one solve
/// per solver config. Solver errors are recorded on the row.
inline std::vector<ResultRow> run_synthetic_trial(const SyntheticTrial& t,
                                                  const std::vector<SolverConfig>& solvers,
                                                  const ResultRow& tmpl,
                                                  const std::vector<std::string>& variants) {
  std::vector<ResultRow> rows;
  DagSpec spec = t.dag;
  spec.avg_degree = std::min(spec.avg_degree, static_cast<double>(spec.d) - 1.0);
  spec.seed = derive_seed({t.seed, 1});
  std::optional<WeightMatrix> w0;
  std::optional<Dataset> data;
  std::string setup_error;
  try {
    w0 = generate_dag(spec);
    data = simulate(*w0, t.n, t.noise_variance, derive_seed({t.seed, 2}));
  } catch (const Error& e) {
    setup_error = e.what();
  }
  for (std::size_t v = 0; v < solvers.size(); ++v) {
    ResultRow row = tmpl;
    row.variant = variants[v];
    row.seed = t.seed;
    row.d = spec.d;
    row.n = t.n;
    if (!setup_error.empty()) {
      row.failed = true;
      row.error = setup_error;
      rows.push_back(std::move(row));
      continue;
    }
    try {
      const SolveResult res = solve(*data, solvers[v]);
      row.metrics = evaluate(res.w_raw, res.w_dag, *w0, res.wall_time);
      row.converged = res.converged;
      row.outer_iters = res.outer_iters;
      row.final_h = res.final_h;
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

using ProgressFn = std::function<void(const ResultRow&)>;

namespace detail {

struct TrialJob {
  SyntheticTrial trial;
  ResultRow tmpl;
  std::vector<SolverConfig> solvers;
  std::vector<std::string> variants;
};

inline std::vector<ResultRow> run_jobs(const std::vector<TrialJob>& jobs, std::size_t threads,
                                       const ProgressFn& progress) {
  using Rows = std::vector<ResultRow>;
  const auto results = run_parallel<Rows>(
      jobs.size(), threads,
      [&](std::size_t k) {
        return run_synthetic_trial(jobs[k].trial, jobs[k].solvers, jobs[k].tmpl,
                                   jobs[k].variants);
      },
      [&](std::size_t, const Rows& rows) {
        if (progress)
          for (const auto& r : rows) progress(r);
      });
  Rows out;
  for (const auto& rs : results) out.insert(out.end(), rs.begin(), rs.end());
  return out;
}

inline void require_kind(const ExperimentConfig& cfg, ExperimentKind kind) {
  cfg.validate();
  if (cfg.experiment != kind) {
    throw ConfigError("config describes " + to_string(cfg.experiment) + ", not " +
                      to_string(kind));
  }
}

}  // namespace detail

/// Sweep over sample counts at fixed graph size.
inline std::vector<ResultRow> run_sample_sweep(const ExperimentConfig& cfg,
                                               const ProgressFn& progress = {}) {
  detail::require_kind(cfg, ExperimentKind::SampleSweep);
  const std::string id = to_string(cfg.experiment);
  std::vector<detail::TrialJob> jobs;
  for (double n : cfg.grid) {
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      detail::TrialJob job;
      job.trial = {cfg.dag, static_cast<std::size_t>(n), cfg.noise_variance,
                   trial_seed(cfg.master_seed, id, n, t)};
      job.tmpl.experiment = id;
      job.tmpl.sweep_value = n;
      job.tmpl.trial = t;
      job.solvers = {cfg.solver};
      job.variants = {to_string(cfg.dag.family)};
      jobs.push_back(std::move(job));
    }
  }
  return detail::run_jobs(jobs, cfg.jobs, progress);
}

/// Sweep over graph sizes, one curve per graph family.
inline std::vector<ResultRow> run_size_sweep(const ExperimentConfig& cfg,
                                             const ProgressFn& progress = {}) {
  detail::require_kind(cfg, ExperimentKind::SizeSweep);
  const std::string id = to_string(cfg.experiment);
  std::vector<detail::TrialJob> jobs;
  for (GraphFamily family : cfg.families) {
    for (double d : cfg.grid) {
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        detail::TrialJob job;
        DagSpec spec = cfg.dag;
        spec.family = family;
        spec.d = static_cast<std::size_t>(d);
        job.trial = {spec, cfg.n, cfg.noise_variance,
                     trial_seed(cfg.master_seed, id + "/" + to_string(family), d, t)};
        job.tmpl.experiment = id;
        job.tmpl.sweep_value = d;
        job.tmpl.trial = t;
        job.solvers = {cfg.solver};
        job.variants = {to_string(family)};
        jobs.push_back(std::move(job));
      }
    }
  }
  return detail::run_jobs(jobs, cfg.jobs, progress);
}

/// Sweep over noise variances. Each trial is solved twice on the same data:
/// plain ("logdet") and with the covariance divided by the known variance
/// ("logdet-sigma").
inline std::vector<ResultRow> run_noise_sweep(const ExperimentConfig& cfg,
                                              const ProgressFn& progress = {}) {
  detail::require_kind(cfg, ExperimentKind::NoiseSweep);
  const std::string id = to_string(cfg.experiment);
  std::vector<detail::TrialJob> jobs;
  for (double s2 : cfg.grid) {
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      detail::TrialJob job;
      job.trial = {cfg.dag, cfg.n, s2, trial_seed(cfg.master_seed, id, s2, t)};
      job.tmpl.experiment = id;
      job.tmpl.sweep_value = s2;
      job.tmpl.trial = t;
      SolverConfig plain = cfg.solver;
      plain.known_sigma2.reset();
      SolverConfig whitened = cfg.solver;
      whitened.known_sigma2 = s2;
      job.solvers = {plain, whitened};
      job.variants = {"logdet", "logdet-sigma"};
      jobs.push_back(std::move(job));
    }
  }
  return detail::run_jobs(jobs, cfg.jobs, progress);
}

/// Dispatches a sweep config and writes its CSV outputs under output_path.
inline std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg,
                                        const ProgressFn& progress = {}) {
  std::vector<ResultRow> rows;
  switch (cfg.experiment) {
    case ExperimentKind::SampleSweep: rows = run_sample_sweep(cfg, progress); break;
    case ExperimentKind::SizeSweep: rows = run_size_sweep(cfg, progress); break;
    case ExperimentKind::NoiseSweep: rows = run_noise_sweep(cfg, progress); break;
    default: throw ConfigError(to_string(cfg.experiment) + " is not a sweep");
  }
  write_sweep_outputs(cfg.output_path, to_string(cfg.experiment), rows);
  return rows;
}

// ---------------------------------------------------------------------------
// Sachs benchmark.

struct SachsResult {
  std::vector<std::string> names;
  WeightMatrix reference{1};
  WeightMatrix w_raw{1};
  WeightMatrix w_dag{1};
  MetricsReport metrics;
  EdgeCounts counts;
  bool converged = false;
  std::size_t outer_iters = 0;
  double final_h = 0.0;
  double alpha = 0.0;
  std::size_t rows = 0;
  /// Reference compared with itself: must give SHD 0 and F1 1.
  std::size_t self_shd = 0;
  double self_f1 = 0.0;
};

inline Dataset load_sachs_data(const SachsOptions& opt) {
  Dataset ds = read_dataset_csv(opt.data_path);
  if ((opt.expected_rows && ds.n() != opt.expected_rows) ||
      (opt.expected_cols && ds.d() != opt.expected_cols)) {
    throw DataError("expected " + std::to_string(opt.expected_rows) + " x " +
                    std::to_string(opt.expected_cols) + " data, found " +
                    std::to_string(ds.n()) + " x " + std::to_string(ds.d()));
  }
  if (ds.names.size() != ds.d()) throw DataError("Sachs data needs a header row");
  return ds;
}

inline SachsResult run_sachs(const ExperimentConfig& cfg) {
  detail::require_kind(cfg, ExperimentKind::Sachs);
  Dataset ds = load_sachs_data(cfg.sachs);
  standardize(ds, cfg.sachs.standardize);
  SachsResult r;
  r.names = ds.names;
  r.rows = ds.n();
  r.reference = read_reference_dag(cfg.sachs.reference_path, ds.names);
  r.self_shd = shd(r.reference, r.reference);
  r.self_f1 = support_confusion(r.reference, r.reference).f1;

  const SolveResult res = solve(ds, cfg.solver);
  r.w_raw = res.w_raw;
  r.w_dag = res.w_dag;
  r.converged = res.converged;
  r.outer_iters = res.outer_iters;
  r.final_h = res.final_h;
  r.alpha = res.alpha;
  r.metrics = evaluate(res.w_raw, res.w_dag, r.reference, res.wall_time);
  r.counts = support_confusion(res.w_dag, r.reference).counts;
  return r;
}

inline Json sachs_report(const SachsResult& r, const ExperimentConfig& cfg) {
  Json j;
  j["data_path"] = cfg.sachs.data_path;
  j["reference_path"] = cfg.sachs.reference_path;
  j["rows"] = r.rows;
  j["variables"] = r.names;
  j["standardize"] = to_string(cfg.sachs.standardize);
  j["solver"] = solver_config_to_json(cfg.solver);
  j["alpha_used"] = r.alpha;
  j["converged"] = r.converged;
  j["outer_iters"] = r.outer_iters;
  j["final_h"] = r.final_h;
  j["acyclic"] = is_acyclic(r.w_dag);
  j["edges"] = r.w_dag.edge_count();
  j["reference_edges"] = r.reference.edge_count();
  j["shd"] = r.metrics.shd;
  j["tpr"] = r.metrics.tpr;
  j["fdr"] = r.metrics.fdr;
  j["f1"] = r.metrics.f1;
  // Frobenius error against the 0/1 reference weights.
  j["nerr"] = r.metrics.nerr;
  j["true_positive"] = r.counts.true_positive;
  j["false_positive"] = r.counts.false_positive;
  j["false_negative"] = r.counts.false_negative;
  j["wall_time"] = r.metrics.wall_time;
  j["self_check"] = {{"shd", r.self_shd}, {"f1", r.self_f1}};
  return j;
}

/// Writes the learned graph (matrix and edge list) and the metrics JSON.
inline void write_sachs_outputs(const std::string& dir, const SachsResult& r,
                                const ExperimentConfig& cfg) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir + "/sachs_w_raw.csv", r.w_raw.matrix(), r.names);
  write_matrix_csv(dir + "/sachs_w_dag.csv", r.w_dag.matrix(), r.names);
  write_edge_list_csv(dir + "/sachs_edges.csv", r.w_dag, r.names);
  std::ofstream(dir + "/sachs_metrics.json") << sachs_report(r, cfg).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Landscape certification report.

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Signed distance to the tolerance; negative means violated.
  double worst_margin = 0.0;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  Json detail = Json::object();
};

inline Json to_json(const CheckResult& c) {
  return {{"name", c.name},
          {"passed", c.passed},
          {"worst_margin", std::isfinite(c.worst_margin) ? Json(c.worst_margin) : Json(nullptr)},
          {"tolerance", c.tolerance},
          {"seed", c.seed},
          {"detail", c.detail}};
}

namespace detail {

inline CheckResult upper_check(std::string name, double value, double tol, std::uint64_t seed) {
  CheckResult c;
  c.name = std::move(name);
  c.worst_margin = tol - value;
  c.passed = value <= tol;
  c.tolerance = tol;
  c.seed = seed;
  c.detail["value"] = std::isfinite(value) ? Json(value) : Json(nullptr);
  return c;
}

}  // namespace detail

/// Every landscape check for one population problem.
inline std::vector<CheckResult> certify_population_problem(const PopulationProblem& base,
                                                           const LandscapeOptions& opt,
                                                           std::uint64_t seed) {
  std::vector<CheckResult> checks;
  const std::size_t d = base.d();
  const DenseMatrix& w0 = base.w0.matrix();
  const auto dd = static_cast<double>(d);

  const auto lu = lu_factor(DenseMatrix::identity(d) - w0);
  const auto ld = lu.signed_log_abs_det();
  const double det_gap = ld && ld->first > 0 ? std::abs(std::exp(ld->second) - 1.0)
                                             : std::numeric_limits<double>::infinity();
  checks.push_back(detail::upper_check("det_identity_at_truth", det_gap, 1e-10, seed));

  PopulationProblem at2 = base;
  at2.lambda = 2.0;
  checks.push_back(detail::upper_check(
      "score_at_truth", std::abs(population_score(w0, at2) - dd), 1e-10, seed));
  checks.push_back(
      detail::upper_check("stationarity_at_truth", stationarity_residual(w0, at2), 1e-8, seed));

  {
    const KktResidual k = kkt_residual(w0, at2);
    CheckResult c;
    c.name = "kkt_at_truth";
    c.tolerance = 1e-10;
    c.seed = seed;
    c.worst_margin = std::min({c.tolerance + k.min_grad_entry, c.tolerance - k.complementarity,
                               c.tolerance - k.trace_identity_gap});
    c.passed = c.worst_margin >= 0.0;
    c.detail = {{"min_grad_entry", k.min_grad_entry},
                {"complementarity", k.complementarity},
                {"trace_identity_gap", k.trace_identity_gap}};
    checks.push_back(std::move(c));
  }

  {
    CheckResult c;
    c.name = "phi_convexity";
    c.tolerance = 0.0;
    c.seed = seed;
    double worst = std::numeric_limits<double>::infinity();
    for (double cc : opt.cs)
      for (int k = 0; k <= 200; ++k) worst = std::min(worst, phi_second(0.05 * k, cc, d));
    c.worst_margin = worst;
    c.passed = worst > 0.0;
    checks.push_back(std::move(c));
  }

  for (double lambda : opt.lambdas) {
    if (lambda < 2.0) continue;
    for (double cc : opt.cs) {
      PopulationProblem p = base;
      p.lambda = lambda;
      p.c = cc;
      const std::uint64_t s = derive_seed({seed, 11, std::bit_cast<std::uint64_t>(lambda),
                                           std::bit_cast<std::uint64_t>(cc)});
      const LowerBoundReport r = check_lower_bound(p, opt.bound_samples, s);
      CheckResult c;
      c.name = "lower_bound";
      c.tolerance = r.tol;
      c.seed = s;
      c.worst_margin = std::min({r.worst_bound_margin, r.worst_phi_margin, r.worst_amgm_margin});
      c.passed = r.passed();
      c.detail = {{"lambda", lambda},
                  {"c", cc},
                  {"samples", r.samples},
                  {"bound_violations", r.bound_violations},
                  {"phi_violations", r.phi_violations},
                  {"amgm_violations", r.amgm_violations},
                  {"worst_bound_margin", r.worst_bound_margin},
                  {"worst_phi_margin", r.worst_phi_margin},
                  {"worst_amgm_margin", r.worst_amgm_margin},
                  {"worst_h_identity_gap", r.worst_h_identity_gap}};
      checks.push_back(std::move(c));
    }
  }

  for (double lambda : {2.0, 3.0}) {
    PopulationProblem p = base;
    p.lambda = lambda;
    const std::uint64_t s = derive_seed({seed, 12, std::bit_cast<std::uint64_t>(lambda)});
    const StationarySearchReport r = search_stationary_points(p, opt.descent_inits, s);
    CheckResult c;
    c.name = lambda > 2.0 ? "no_stationary_point" : "stationary_point_is_truth";
    c.seed = s;
    if (lambda > 2.0) {
      c.tolerance = r.residual_floor;
      c.worst_margin = r.min_residual - r.residual_floor;
    } else {
      c.tolerance = r.truth_tol;
      c.worst_margin = -static_cast<double>(r.interior_converged - r.converged_to_truth +
                                            r.projected_stationary - r.projected_to_truth);
    }
    c.passed = r.passed();
    c.detail = {{"lambda", lambda},
                {"runs", r.runs},
                {"interior_converged", r.interior_converged},
                {"converged_to_truth", r.converged_to_truth},
                {"hit_boundary", r.hit_boundary},
                {"projected_stationary", r.projected_stationary},
                {"projected_to_truth", r.projected_to_truth},
                {"projected_other_kkt", r.projected_other_kkt},
                {"min_h_other_kkt", r.min_h_other_kkt},
                {"exhausted", r.exhausted},
                {"stalled", r.stalled},
                {"min_residual", r.min_residual},
                {"max_singular_value_spread", r.max_singular_value_spread}};
    checks.push_back(std::move(c));
  }

  {
    PopulationProblem p = base;
    p.lambda = 2.0;
    const std::uint64_t s = derive_seed({seed, 13});
    const KktUniquenessReport r = verify_acyclic_kkt_uniqueness(p, opt.kkt_candidates, s);
    CheckResult c;
    c.name = "acyclic_kkt_uniqueness";
    c.tolerance = r.truth_tol;
    c.seed = s;
    double worst_nerr = 0.0;
    for (const auto& rec : r.records)
      if (rec.certified) worst_nerr = std::max(worst_nerr, rec.nerr_to_truth);
    c.worst_margin = r.truth_tol - worst_nerr;
    c.passed = r.passed();
    c.detail = {{"candidates", r.candidates},
                {"certified", r.certified},
                {"excluded_infeasible", r.excluded_infeasible},
                {"excluded_kkt", r.excluded_kkt},
                {"solver_failures", r.solver_failures},
                {"mismatches", r.mismatches}};
    checks.push_back(std::move(c));
  }
  return checks;
}

/// Runs every landscape check for each node count in the grid and
/// `trials` seeds per size. Report-only: failures are recorded, not thrown.
inline Json run_landscape_cert(const ExperimentConfig& cfg) {
  detail::require_kind(cfg, ExperimentKind::LandscapeCert);
  struct Instance {
    std::size_t d = 0;
    std::size_t seed_index = 0;
  };
  std::vector<Instance> instances;
  for (double d : cfg.grid)
    for (std::size_t t = 0; t < cfg.trials; ++t)
      instances.push_back({static_cast<std::size_t>(d), t});

  const auto start = std::chrono::steady_clock::now();
  const auto results = run_parallel<Json>(instances.size(), cfg.jobs, [&](std::size_t k) {
    const Instance& inst = instances[k];
    const std::uint64_t seed = trial_seed(cfg.master_seed, "landscape-cert",
                                          static_cast<double>(inst.d), inst.seed_index);
    Json out;
    out["d"] = inst.d;
    out["seed"] = seed;
    try {
      DagSpec spec = cfg.dag;
      spec.d = inst.d;
      spec.avg_degree = std::min(spec.avg_degree, static_cast<double>(inst.d) - 1.0);
      spec.seed = derive_seed({seed, 1});
      PopulationProblem prob = PopulationProblem::make(generate_dag(spec), 2.0, 1.0);
      if (cfg.landscape.sigma_perturbation != 0.0) {
        for (std::size_t i = 0; i < inst.d; ++i)
          for (std::size_t j = 0; j < inst.d; ++j)
            if (i != j) prob.sigma_x.sigma(i, j) += cfg.landscape.sigma_perturbation;
      }
      out["edges"] = prob.w0.edge_count();
      out["sigma_inconsistency"] = prob.sigma_inconsistency();
      Json checks = Json::array();
      bool ok = true;
      for (const auto& c : certify_population_problem(prob, cfg.landscape, seed)) {
        ok = ok && c.passed;
        checks.push_back(to_json(c));
      }
      out["passed"] = ok;
      out["checks"] = std::move(checks);
      out["error"] = nullptr;
    } catch (const Error& e) {
      out["edges"] = 0;
      out["passed"] = false;
      out["checks"] = Json::array();
      out["error"] = e.what();
    }
    return out;
  });

  Json report;
  report["schema_version"] = 1;
  report["experiment"] = "landscape-cert";
  report["master_seed"] = cfg.master_seed;
  report["note"] =
      "Absence of spurious stationary points is established only over the sampled "
      "initializations; a numerical search cannot prove nonexistence.";
  report["settings"] = {{"grid", cfg.grid},
                        {"seeds_per_size", cfg.trials},
                        {"avg_degree", cfg.dag.avg_degree},
                        {"lambdas", cfg.landscape.lambdas},
                        {"cs", cfg.landscape.cs},
                        {"bound_samples", cfg.landscape.bound_samples},
                        {"descent_inits", cfg.landscape.descent_inits},
                        {"kkt_candidates", cfg.landscape.kkt_candidates},
                        {"sigma_perturbation", cfg.landscape.sigma_perturbation}};
  std::size_t failed_instances = 0, total_checks = 0, failed_checks = 0;
  Json insts = Json::array();
  for (const auto& r : results) {
    if (!r["passed"].get<bool>()) ++failed_instances;
    for (const auto& c : r["checks"]) {
      ++total_checks;
      if (!c["passed"].get<bool>()) ++failed_checks;
    }
    insts.push_back(r);
  }
  report["summary"] = {
      {"instances", results.size()},
      {"failed_instances", failed_instances},
      {"checks", total_checks},
      {"failed_checks", failed_checks},
      {"wall_time",
       std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
  report["passed"] = failed_instances == 0;
  report["instances"] = std::move(insts);
  return report;
}

}  // namespace nomad

#endif  // NOMAD_EXPERIMENTS_HPP
