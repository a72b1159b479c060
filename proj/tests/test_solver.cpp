#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "nomad/landscape.hpp"
#include "nomad/metrics.hpp"
#include "nomad/solver.hpp"
#include "test_util.hpp"

namespace nomad {
namespace {

using test::max_diff;
using test::random_weights;
using test::to_eigen;

WeightMatrix random_dag(std::size_t d, std::uint64_t seed, double degree = 2.0) {
  DagSpec spec;
  spec.d = d;
  spec.avg_degree = std::min(degree, static_cast<double>(d) - 1.0);
  spec.seed = seed;
  return generate_dag(spec);
}

Covariance identity_cov(std::size_t d) { return {DenseMatrix::identity(d), CovarianceKind::Sample}; }

TEST(SolverConfig, ValidateRejectsBadValues) {
  const auto bad = [](auto mutate) {
    SolverConfig cfg;
    mutate(cfg);
    return cfg;
  };
  EXPECT_NO_THROW(SolverConfig{}.validate());
  EXPECT_THROW(bad([](SolverConfig& c) { c.beta = 1.0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.gamma = 1.0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.gamma = 0.0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.c0 = 0.0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.alpha = -0.1; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.h_tol = 0.0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.inner_tol = -1.0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.known_sigma2 = 0.0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SolverConfig& c) { c.threshold_tau = -1.0; }).validate(), ConfigError);
  EXPECT_THROW(parse_inner_method("sgd"), ConfigError);
}

TEST(DefaultAlpha, ShrinksWithSampleSize) {
  EXPECT_NEAR(default_alpha(20, 1000), 0.05 * std::sqrt(std::log(20.0) / 1000.0), 1e-15);
  EXPECT_GT(default_alpha(20, 100), default_alpha(20, 10000));
}

TEST(Score, Examples) {
  EXPECT_DOUBLE_EQ(score(WeightMatrix(4), identity_cov(4), 0.0), 2.0);
  const WeightMatrix w0 = random_dag(7, 3);
  EXPECT_NEAR(score(w0, population_covariance(w0, 1.0), 0.0), 3.5, 1e-10);
  // With a zero covariance only the penalty remains.
  const Covariance zero{DenseMatrix(3, 3), CovarianceKind::Sample};
  WeightMatrix single(3);
  single.set(0, 2, 0.7);
  EXPECT_NEAR(score(single, zero, 0.4), 0.7 * 0.4, 1e-15);
  EXPECT_THROW(score(WeightMatrix(2), identity_cov(3), 0.0), DimensionError);
}

TEST(Score, MatchesResidualForm) {
  // 1/(2n) ||X - W^T X||^2 + alpha sum W equals the covariance form.
  const WeightMatrix w0 = random_dag(6, 8);
  const Dataset ds = simulate(w0, 300, 1.0, 2);
  Rng rng(4);
  const WeightMatrix w(random_weights(6, rng, 0.9));
  const Eigen::MatrixXd x = to_eigen(ds.x), ew = to_eigen(w.matrix());
  const double alpha = 0.03;
  const double oracle = (x - ew.transpose() * x).squaredNorm() / (2.0 * 300) + alpha * ew.sum();
  EXPECT_NEAR(score(w, sample_covariance(ds), alpha), oracle, 1e-11);
}

TEST(ScoreGradient, Examples) {
  EXPECT_EQ(score_gradient(WeightMatrix(3), identity_cov(3), 0.0), DenseMatrix::identity(3) * -1.0);
  const Covariance zero{DenseMatrix(3, 3), CovarianceKind::Sample};
  const DenseMatrix g = score_gradient(WeightMatrix(3), zero, 0.5);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(g(i, j), i == j ? 0.0 : 0.5);
}

TEST(ScoreGradient, MatchesFiniteDifferences) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(trial % 7);
    const DenseMatrix a = test::random_matrix(d, d, rng);
    const Covariance cov{multiply(a, transpose(a)), CovarianceKind::Sample};
    DenseMatrix w = random_weights(d, rng, 0.9, 1.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (i != j) w(i, j) += 0.01;
    const WeightMatrix ww(w);
    const double alpha = 0.1;
    const DenseMatrix g = score_gradient(ww, cov, alpha);
    const double step = 1e-6;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (i == j) continue;
        WeightMatrix p = ww, m = ww;
        p.set(i, j, w(i, j) + step);
        m.set(i, j, w(i, j) - step);
        const double fd = (score(p, cov, alpha) - score(m, cov, alpha)) / (2.0 * step);
        EXPECT_NEAR(g(i, j), fd, 1e-5);
      }
    }
  }
}

TEST(AugmentedLagrangian, TwoCycleExample) {
  const WeightMatrix w{{0.0, 0.5}, {0.5, 0.0}};
  const auto kind = AcyclicityKind::log_det(1.0);
  const double h = -std::log(0.75);
  const Eigen::Matrix2d m = Eigen::Matrix2d::Identity() - to_eigen(w.matrix());
  const double oracle = 0.5 * (m.transpose() * m).trace() + 1.0 * h + 0.5 * 2.0 * h * h;
  EXPECT_NEAR(augmented_lagrangian(w, identity_cov(2), 0.0, kind, 1.0, 2.0), oracle, 1e-14);
  EXPECT_NEAR(oracle, 1.25 + 0.2876821 + 0.2876821 * 0.2876821, 1e-6);
}

TEST(AugmentedLagrangian, ReducesToScore) {
  const auto kind = AcyclicityKind::log_det(1.0);
  const WeightMatrix dag = random_dag(6, 1);
  const Covariance cov = population_covariance(dag, 1.0);
  EXPECT_NEAR(augmented_lagrangian(dag, cov, 0.1, kind, 3.0, 7.0), score(dag, cov, 0.1), 1e-10);
  Rng rng(2);
  const WeightMatrix cyc(random_weights(6, rng, 0.8));
  EXPECT_NEAR(augmented_lagrangian(cyc, cov, 0.1, kind, 0.0, 0.0), score(cyc, cov, 0.1), 1e-14);
  const DenseMatrix g = augmented_lagrangian_gradient(dag, cov, 0.1, kind, 0.0, 7.0);
  EXPECT_LT(max_diff(g, score_gradient(dag, cov, 0.1)), 1e-10);
}

TEST(AugmentedLagrangian, OutsideDomainRaises) {
  const WeightMatrix w{{0.0, 1.5}, {1.5, 0.0}};
  const auto kind = AcyclicityKind::log_det(1.0);
  EXPECT_THROW(augmented_lagrangian(w, identity_cov(2), 0.0, kind, 1.0, 1.0), DomainError);
  EXPECT_THROW(augmented_lagrangian_gradient(w, identity_cov(2), 0.0, kind, 1.0, 1.0),
               DomainError);
  EXPECT_NO_THROW(augmented_lagrangian(w, identity_cov(2), 0.0, AcyclicityKind::mat_exp(), 1, 1));
}

TEST(AugmentedLagrangian, GradientMatchesFiniteDifferences) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(trial % 6);
    const auto kind = trial % 2 ? AcyclicityKind::log_det(1.0) : AcyclicityKind::mat_exp();
    const DenseMatrix a = test::random_matrix(d, d, rng);
    const Covariance cov{multiply(a, transpose(a)), CovarianceKind::Sample};
    DenseMatrix w = random_weights(d, rng, 0.7, 1.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (i != j) w(i, j) += 0.01;
    const WeightMatrix ww(w);
    const double lambda = 0.7, c = 3.0, alpha = 0.05;
    const DenseMatrix g = augmented_lagrangian_gradient(ww, cov, alpha, kind, lambda, c);
    const double step = 1e-6;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (i == j) continue;
        WeightMatrix p = ww, m = ww;
        p.set(i, j, w(i, j) + step);
        m.set(i, j, w(i, j) - step);
        const double fd = (augmented_lagrangian(p, cov, alpha, kind, lambda, c) -
                           augmented_lagrangian(m, cov, alpha, kind, lambda, c)) /
                          (2.0 * step);
        EXPECT_NEAR(g(i, j), fd, 1e-5) << to_string(kind) << " trial " << trial;
      }
    }
  }
}

TEST(AugmentedLagrangian, TruthIsStationaryAtHalvedThreshold) {
  // Under the 1/2-scaled score the population threshold multiplier is 1.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const WeightMatrix w0 = random_dag(5 + seed, seed);
    const Covariance cov = population_covariance(w0, 1.0);
    const DenseMatrix g =
        augmented_lagrangian_gradient(w0, cov, 0.0, AcyclicityKind::log_det(1.0), 1.0, 3.0);
    EXPECT_LT(max_abs(g), 1e-8);
  }
}

TEST(InnerSolve, IdentityCovarianceShrinksToZero) {
  Rng rng(14);
  for (InnerMethod method :
       {InnerMethod::ProjectedGradient, InnerMethod::Fista, InnerMethod::ProjectedNewton}) {
    SolverConfig cfg;
    cfg.newton_scaling = method == InnerMethod::ProjectedNewton;
    cfg.use_fista = method == InnerMethod::Fista;
    cfg.inner_tol = 1e-9;
    const WeightMatrix start(random_weights(5, rng, 0.8, 0.7));
    SolverState state(start, 0.0, 0.0, cfg.eta0);
    const auto before = augmented_lagrangian(start, identity_cov(5), 0.0, cfg.acyclicity, 0, 0);
    const InnerResult r = inner_solve(state, DenseMatrix::identity(5), 0.0, cfg);
    EXPECT_LE(r.residual, cfg.inner_tol) << to_string(method);
    EXPECT_LT(max_abs(r.w.matrix()), 1e-8) << to_string(method);
    EXPECT_LE(r.value, before) << to_string(method);
  }
}

TEST(InnerSolve, StationaryStartReturnsImmediately) {
  SolverConfig cfg;
  SolverState state(WeightMatrix(4), 0.0, 1.0, cfg.eta0);
  const InnerResult r = inner_solve(state, DenseMatrix::identity(4), 0.0, cfg);
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_EQ(r.w, WeightMatrix(4));
}

TEST(InnerSolve, IteratesStayFeasible) {
  const WeightMatrix w0 = random_dag(8, 5, 3.0);
  const Dataset ds = simulate(w0, 200, 1.0, 6);
  const Covariance cov = sample_covariance(ds);
  for (InnerMethod method :
       {InnerMethod::ProjectedGradient, InnerMethod::Fista, InnerMethod::ProjectedNewton}) {
    SolverConfig cfg;
    cfg.newton_scaling = method == InnerMethod::ProjectedNewton;
    cfg.use_fista = method == InnerMethod::Fista;
    SolverState state(WeightMatrix(8), 0.0, 1.0, cfg.eta0);
    for (int k = 0; k < 4; ++k) {
      const InnerResult r = inner_solve(state, cov.sigma, 0.01, cfg);
      // WeightMatrix construction already enforces W >= 0 and a zero diagonal.
      EXPECT_TRUE(check_domain(r.w, cfg.acyclicity));
      EXPECT_GE(r.h, -1e-12);
      state.w = r.w;
      state.lambda += state.c * r.h;
      state.c *= 5.0;
    }
  }
}

TEST(Solve, SingleNodeIsTrivial) {
  const Covariance cov{DenseMatrix{{2.0}}, CovarianceKind::Population};
  const SolveResult r = solve(cov, SolverConfig{});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.w_raw, WeightMatrix(1));
  EXPECT_EQ(r.final_h, 0.0);
}

TEST(Solve, PopulationRecoveryOnSmallDag) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const WeightMatrix w0 = random_dag(6, 100 + seed, 3.0);
    const Covariance cov = population_covariance(w0, 1.0);
    SolverConfig cfg;
    cfg.alpha = 0.0;
    const SolveResult r = solve(cov, cfg);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(nerr(r.w_raw, w0), 1e-4) << "seed " << seed;
    EXPECT_EQ(shd(r.w_dag, w0), 0u) << "seed " << seed;
  }
}

TEST(Solve, PopulationSolutionIsStationaryForUnscaledLagrangian) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const WeightMatrix w0 = random_dag(8, 200 + seed, 3.0);
    const auto prob = PopulationProblem::make(w0, 2.0, 1.0);
    const SolveResult r = solve(prob.sigma_x, population_solver_config());
    ASSERT_TRUE(r.converged);
    EXPECT_LE(stationarity_residual(r.w_raw, prob), 1e-6) << "seed " << seed;
  }
}

TEST(Solve, OuterLoopInvariants) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const WeightMatrix w0 = random_dag(20, 300 + seed, 4.0);
    const Dataset ds = simulate(w0, 1000, 1.0, seed);
    SolverConfig cfg;
    const SolveResult r = solve(ds, cfg);
    const SolverState& st = r.state;
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.outer_iters, 20u);
    EXPECT_TRUE(is_acyclic(r.w_dag));
    ASSERT_EQ(st.h_history.size(), r.outer_iters);
    double lambda_prev = cfg.lambda0, c_prev = cfg.c0, h_prev = 0.0;
    for (std::size_t k = 0; k < r.outer_iters; ++k) {
      const double h = st.h_history[k];
      EXPECT_GE(h, -1e-12);
      EXPECT_GE(st.lambda_history[k], lambda_prev);
      EXPECT_DOUBLE_EQ(st.lambda_history[k], lambda_prev + c_prev * h);
      // Penalty grows by exactly beta iff the violation did not shrink enough.
      EXPECT_EQ(st.c_history[k], h > cfg.gamma * h_prev ? c_prev * cfg.beta : c_prev);
      lambda_prev = st.lambda_history[k];
      c_prev = st.c_history[k];
      h_prev = h;
    }
  }
}

TEST(Solve, PenaltyHoldsWhenViolationShrinksEnough) {
  // A large gamma makes the hold branch reachable.
  const WeightMatrix w0 = random_dag(10, 7, 3.0);
  const Dataset ds = simulate(w0, 500, 1.0, 8);
  SolverConfig cfg;
  cfg.gamma = 0.99;
  const SolveResult r = solve(ds, cfg);
  std::size_t grows = 0, holds = 0;
  double c_prev = cfg.c0;
  for (double c : r.state.c_history) {
    (c > c_prev ? grows : holds) += 1;
    c_prev = c;
  }
  EXPECT_GT(grows, 0u);
  EXPECT_GT(holds, 0u);
}

TEST(Solve, IsDeterministic) {
  const WeightMatrix w0 = random_dag(12, 9, 3.0);
  const Dataset ds = simulate(w0, 400, 1.0, 10);
  const SolveResult a = solve(ds, SolverConfig{});
  const SolveResult b = solve(ds, SolverConfig{});
  EXPECT_EQ(a.w_raw, b.w_raw);
  EXPECT_EQ(a.w_dag, b.w_dag);
  EXPECT_EQ(a.state.h_history, b.state.h_history);
}

TEST(Solve, KnownVarianceIsPreWhitening) {
  const WeightMatrix w0 = random_dag(8, 11, 3.0);
  const Covariance base = population_covariance(w0, 1.0);
  Covariance scaled = base;
  scaled.sigma *= 4.0;
  SolverConfig cfg;
  cfg.alpha = 0.0;
  const SolveResult plain = solve(base, cfg);
  cfg.known_sigma2 = 4.0;
  const SolveResult whitened = solve(scaled, cfg);
  EXPECT_LT(max_diff(plain.w_raw.matrix(), whitened.w_raw.matrix()), 1e-10);
}

TEST(Solve, AllInnerMethodsRecoverTheSameGraph) {
  const WeightMatrix w0 = random_dag(8, 12, 3.0);
  const Covariance cov = population_covariance(w0, 1.0);
  for (InnerMethod method :
       {InnerMethod::ProjectedGradient, InnerMethod::Fista, InnerMethod::ProjectedNewton}) {
    SolverConfig cfg;
    cfg.alpha = 0.0;
    cfg.newton_scaling = method == InnerMethod::ProjectedNewton;
    cfg.use_fista = method == InnerMethod::Fista;
    cfg.inner_max_iters = 20000;
    const SolveResult r = solve(cov, cfg);
    EXPECT_EQ(shd(r.w_dag, w0), 0u) << to_string(method);
  }
}

TEST(Solve, MatExpVariantConverges) {
  const WeightMatrix w0 = random_dag(10, 13, 3.0);
  const Dataset ds = simulate(w0, 1000, 1.0, 14);
  SolverConfig cfg;
  cfg.acyclicity = AcyclicityKind::mat_exp();
  const SolveResult r = solve(ds, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(is_acyclic(r.w_dag));
  EXPECT_LE(shd(r.w_dag, w0), 2u);
}

TEST(Solve, RejectsInvalidInputs) {
  SolverConfig cfg;
  cfg.beta = 0.5;
  EXPECT_THROW(solve(identity_cov(3), cfg), ConfigError);
  EXPECT_THROW(solve(identity_cov(3), SolverConfig{}, WeightMatrix(2)), DimensionError);
  EXPECT_THROW(solve(identity_cov(2), SolverConfig{}, WeightMatrix{{0.0, 2.0}, {2.0, 0.0}}),
               DomainError);
}

TEST(ExtractDag, ThresholdsThenBreaksCycles) {
  const WeightMatrix w{{0.0, 0.9, 0.1}, {0.4, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  EXPECT_EQ(extract_dag(w, 0.3), (WeightMatrix{{0.0, 0.9, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}));
}

}  // namespace
}  // namespace nomad
