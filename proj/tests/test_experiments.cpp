#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "nomad/experiments.hpp"
#include "test_util.hpp"

namespace nomad {
namespace {

using test::TempDir;

const std::string kSource = NOMAD_SOURCE_DIR;

Json small_sweep_json() {
  return Json::parse(R"({
    "experiment": "sample-sweep", "grid": [60, 200], "trials": 3, "master_seed": 9,
    "dag": {"d": 6, "family": "ER", "avg_degree": 2},
    "solver": {"beta": 20}, "output_path": "unused"})");
}

TEST(ExperimentConfig, ShippedConfigsParse) {
  for (const char* name : {"sample_sweep", "size_sweep", "noise_sweep", "sachs",
                           "landscape_cert"}) {
    EXPECT_NO_THROW(load_experiment_config(kSource + "/configs/" + name + ".json")) << name;
  }
  const ExperimentConfig s = load_experiment_config(kSource + "/configs/sachs.json");
  EXPECT_EQ(s.sachs.standardize, Standardize::Center);
  EXPECT_DOUBLE_EQ(s.solver.threshold_tau, 0.3);
}

TEST(ExperimentConfig, SolverDefaultsFileMatchesBuiltInDefaults) {
  std::ifstream in(kSource + "/configs/solver_defaults.json");
  const SolverConfig parsed = parse_solver_config(Json::parse(in));
  EXPECT_EQ(solver_config_to_json(parsed), solver_config_to_json(SolverConfig{}));
}

TEST(ExperimentConfig, RejectsUnknownKeysAtEveryLevel) {
  Json j = small_sweep_json();
  j["trails"] = 3;
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  j = small_sweep_json();
  j["solver"]["betta"] = 2;
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  j = small_sweep_json();
  j["dag"]["degree"] = 2;
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  j = small_sweep_json();
  j["landscape"] = {{"inits", 3}};
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
}

TEST(ExperimentConfig, RejectsInvalidValues) {
  Json j = small_sweep_json();
  j["grid"] = Json::array();
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  j = small_sweep_json();
  j["grid"] = {100.5};
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  j = small_sweep_json();
  j["trials"] = "three";
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  j = small_sweep_json();
  j["solver"]["beta"] = 1.0;
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  j = small_sweep_json();
  j.erase("experiment");
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  j = small_sweep_json();
  j["experiment"] = "noise-sweep";
  j["grid"] = {1.0, 0.0};
  EXPECT_THROW(parse_experiment_config(j), ConfigError);
  j["grid"] = {1.0, -2.0};
  EXPECT_THROW(parse_experiment_config(j), ConfigError);

  TempDir dir("exp_cfg");
  std::ofstream(dir.file("broken.json")) << "{\"experiment\": ";
  EXPECT_THROW(load_experiment_config(dir.file("broken.json")), ConfigError);
  EXPECT_THROW(load_experiment_config(dir.file("absent.json")), ConfigError);
}

TEST(Percentile, LinearInterpolationExamples) {
  EXPECT_DOUBLE_EQ(percentile({3.0, 1.0, 2.0, 4.0}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(percentile({3.0, 1.0, 2.0, 4.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(percentile({3.0, 1.0, 2.0, 4.0}, 0.75), 3.25);
  EXPECT_DOUBLE_EQ(percentile({7.0}, 0.9), 7.0);
  EXPECT_DOUBLE_EQ(percentile({5.0, 1.0}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile({5.0, 1.0}, 1.0), 5.0);
  EXPECT_THROW(percentile({}, 0.5), ConfigError);
  EXPECT_TRUE(std::isnan(quartiles({}).median));
}

TEST(Percentile, OrderedAndBracketedByExtremes) {
  Rng rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + trial % 17);
    for (double& x : v) x = u(rng);
    const Quartiles q = quartiles(v);
    EXPECT_LE(q.p25, q.median);
    EXPECT_LE(q.median, q.p75);
    EXPECT_GE(q.p25, *std::min_element(v.begin(), v.end()));
    EXPECT_LE(q.p75, *std::max_element(v.begin(), v.end()));
  }
}

ResultRow make_row(const std::string& variant, double x, double nerr, bool failed = false) {
  ResultRow r;
  r.experiment = "sample-sweep";
  r.variant = variant;
  r.sweep_value = x;
  r.metrics.nerr = nerr;
  r.metrics.f1 = 1.0 - nerr;
  r.converged = !failed;
  r.outer_iters = static_cast<std::size_t>(10 * nerr);
  r.failed = failed;
  if (failed) r.error = "domain, left\nearly";
  return r;
}

TEST(Aggregate, GroupsByVariantAndValueAndExcludesFailures) {
  const std::vector<ResultRow> rows = {make_row("ER", 100, 0.1), make_row("SF", 100, 0.4),
                                       make_row("ER", 100, 0.3), make_row("ER", 100, 9.0, true),
                                       make_row("ER", 1000, 0.2)};
  const auto agg = aggregate(rows);
  ASSERT_EQ(agg.size(), 3u);
  EXPECT_EQ(agg[0].variant, "ER");
  EXPECT_EQ(agg[0].sweep_value, 100.0);
  EXPECT_EQ(agg[0].trials, 3u);
  EXPECT_EQ(agg[0].excluded, 1u);
  EXPECT_EQ(agg[0].converged, 2u);
  EXPECT_DOUBLE_EQ(agg[0].nerr.median, 0.2);
  EXPECT_DOUBLE_EQ(agg[0].nerr.p25, 0.15);
  EXPECT_DOUBLE_EQ(agg[0].f1.p75, 0.85);
  EXPECT_EQ(agg[1].variant, "SF");
  EXPECT_EQ(agg[2].sweep_value, 1000.0);
}

TEST(ResultsCsv, RoundTrips) {
  TempDir dir("exp_rows");
  std::vector<ResultRow> rows = {make_row("ER", 100, 0.125), make_row("SF", 20, 0.5, true)};
  rows[0].seed = 18446744073709551557ull;
  rows[0].metrics.shd = 4;
  rows[0].final_h = 1e-12;
  write_results_csv(dir.file("r.csv"), rows);
  const auto back = read_results_csv(dir.file("r.csv"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].seed, rows[0].seed);
  EXPECT_EQ(back[0].metrics.shd, 4u);
  EXPECT_EQ(back[0].metrics.nerr, 0.125);
  EXPECT_EQ(back[0].final_h, 1e-12);
  EXPECT_TRUE(back[1].failed);
  // Commas and newlines in messages are neutralized.
  EXPECT_EQ(back[1].error, "domain; left early");
}

TEST(TrialSeed, DependsOnEveryComponent) {
  const std::uint64_t base = trial_seed(1, "noise-sweep", 1.0, 0);
  EXPECT_EQ(base, trial_seed(1, "noise-sweep", 1.0, 0));
  EXPECT_NE(base, trial_seed(2, "noise-sweep", 1.0, 0));
  EXPECT_NE(base, trial_seed(1, "sample-sweep", 1.0, 0));
  EXPECT_NE(base, trial_seed(1, "noise-sweep", 4.0, 0));
  EXPECT_NE(base, trial_seed(1, "noise-sweep", 1.0, 1));
}

TEST(RunParallel, KeepsSlotOrderRegardlessOfThreads) {
  const std::function<int(std::size_t)> square = [](std::size_t k) {
    return static_cast<int>(k * k);
  };
  std::size_t calls = 0;
  const auto a = run_parallel<int>(37, 1, square);
  const auto b = run_parallel<int>(37, 4, square, [&](std::size_t, const int&) { ++calls; });
  EXPECT_EQ(a, b);
  EXPECT_EQ(calls, 37u);
  EXPECT_EQ(a[6], 36);
}

bool same_except_time(const ResultRow& a, const ResultRow& b) {
  return a.variant == b.variant && a.sweep_value == b.sweep_value && a.trial == b.trial &&
         a.seed == b.seed && a.metrics.nerr == b.metrics.nerr && a.metrics.shd == b.metrics.shd &&
         a.metrics.tpr == b.metrics.tpr && a.metrics.fdr == b.metrics.fdr &&
         a.converged == b.converged && a.outer_iters == b.outer_iters && a.final_h == b.final_h;
}

TEST(SampleSweep, BitwiseReproducibleAcrossJobCounts) {
  ExperimentConfig cfg = parse_experiment_config(small_sweep_json());
  cfg.jobs = 1;
  const auto serial = run_sample_sweep(cfg);
  cfg.jobs = 2;
  const auto threaded = run_sample_sweep(cfg);
  ASSERT_EQ(serial.size(), 6u);
  ASSERT_EQ(threaded.size(), 6u);
  for (std::size_t k = 0; k < serial.size(); ++k) {
    EXPECT_TRUE(same_except_time(serial[k], threaded[k])) << "row " << k;
    EXPECT_FALSE(serial[k].failed) << serial[k].error;
    EXPECT_EQ(serial[k].d, 6u);
  }
  EXPECT_EQ(serial[0].n, 60u);
  EXPECT_EQ(serial[5].n, 200u);
}

TEST(NoiseSweep, SolvesEachTrialPlainAndWhitened) {
  Json j = small_sweep_json();
  j["experiment"] = "noise-sweep";
  j["grid"] = {1.0, 4.0};
  j["trials"] = 1;
  j["n"] = 300;
  const auto rows = run_noise_sweep(parse_experiment_config(j));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].variant, "logdet");
  EXPECT_EQ(rows[1].variant, "logdet-sigma");
  EXPECT_EQ(rows[0].seed, rows[1].seed);
  EXPECT_NE(rows[0].seed, rows[2].seed);
  // At unit variance pre-whitening is the identity.
  EXPECT_EQ(rows[0].metrics.nerr, rows[1].metrics.nerr);
}

TEST(RunSweep, WritesRowAggregateAndCurveFiles) {
  TempDir dir("exp_sweep");
  Json j = small_sweep_json();
  j["experiment"] = "size-sweep";
  j["grid"] = {5};
  j["trials"] = 2;
  j["n"] = 100;
  j["output_path"] = dir.str();
  const auto rows = run_sweep(parse_experiment_config(j));
  EXPECT_EQ(rows.size(), 4u);
  for (const char* f : {"size-sweep_rows.csv", "size-sweep_aggregate.csv", "size-sweep_ER.csv",
                        "size-sweep_SF.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir.file(f))) << f;
  EXPECT_EQ(read_results_csv(dir.file("size-sweep_rows.csv")).size(), 4u);
  j["experiment"] = "sachs";
  EXPECT_THROW(run_sweep(parse_experiment_config(j)), ConfigError);
}

TEST(Sachs, MissingColumnRaisesDataError) {
  TempDir dir("exp_sachs");
  const Dataset full = read_dataset_csv(kSource + "/data/sachs/sachs_cd3cd28.csv");
  Dataset cut{DenseMatrix(10, full.n()), 1.0, FileSource{}, {}};
  for (std::size_t j = 0; j < 10; ++j) {
    cut.names.push_back(full.names[j]);
    for (std::size_t s = 0; s < full.n(); ++s) cut.x(j, s) = full.x(j, s);
  }
  write_dataset_csv(dir.file("cut.csv"), cut);
  SachsOptions opt;
  opt.data_path = dir.file("cut.csv");
  EXPECT_THROW(load_sachs_data(opt), DataError);
  opt.data_path = kSource + "/data/sachs/sachs_cd3cd28.csv";
  const Dataset ok = load_sachs_data(opt);
  EXPECT_EQ(ok.n(), 853u);
  EXPECT_EQ(ok.d(), 11u);
}

TEST(Sachs, ReferenceSelfCheckAndAcyclicOutput) {
  ExperimentConfig cfg = load_experiment_config(kSource + "/configs/sachs.json");
  cfg.sachs.data_path = kSource + "/" + cfg.sachs.data_path;
  cfg.sachs.reference_path = kSource + "/" + cfg.sachs.reference_path;
  const SachsResult r = run_sachs(cfg);
  EXPECT_EQ(r.self_shd, 0u);
  EXPECT_EQ(r.self_f1, 1.0);
  EXPECT_EQ(r.reference.edge_count(), 17u);
  EXPECT_TRUE(is_acyclic(r.w_dag));
  const Json j = sachs_report(r, cfg);
  for (const char* key : {"shd", "tpr", "fdr", "f1", "edges", "acyclic", "self_check", "solver"})
    EXPECT_TRUE(j.contains(key)) << key;
}

Json small_landscape_json(double perturbation) {
  Json j = Json::parse(R"({
    "experiment": "landscape-cert", "grid": [3, 4], "trials": 1, "master_seed": 4,
    "dag": {"avg_degree": 2},
    "landscape": {"bound_samples": 300, "descent_inits": 6, "kkt_candidates": 3}})");
  j["landscape"]["sigma_perturbation"] = perturbation;
  return j;
}

TEST(LandscapeCert, ReportSchemaAndPass) {
  const Json report = run_landscape_cert(parse_experiment_config(small_landscape_json(0.0)));
  for (const char* key : {"schema_version", "experiment", "master_seed", "note", "settings",
                          "summary", "passed", "instances"})
    EXPECT_TRUE(report.contains(key)) << key;
  EXPECT_TRUE(report["passed"].get<bool>()) << report.dump(1);
  ASSERT_EQ(report["instances"].size(), 2u);
  std::set<std::string> names;
  for (const auto& c : report["instances"][0]["checks"]) {
    for (const char* key : {"name", "passed", "worst_margin", "tolerance", "seed", "detail"})
      EXPECT_TRUE(c.contains(key)) << key;
    names.insert(c["name"].get<std::string>());
  }
  for (const char* n : {"det_identity_at_truth", "score_at_truth", "stationarity_at_truth",
                        "kkt_at_truth", "phi_convexity", "lower_bound", "stationary_point_is_truth",
                        "no_stationary_point", "acyclic_kkt_uniqueness"})
    EXPECT_TRUE(names.count(n)) << n;
  EXPECT_EQ(report["summary"]["failed_checks"].get<std::size_t>(), 0u);
}

TEST(LandscapeCert, PerturbedCovarianceIsReportedAsFailure) {
  const Json report = run_landscape_cert(parse_experiment_config(small_landscape_json(0.3)));
  EXPECT_FALSE(report["passed"].get<bool>());
  EXPECT_GT(report["summary"]["failed_checks"].get<std::size_t>(), 0u);
}

}  // namespace
}  // namespace nomad
