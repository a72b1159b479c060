#ifndef NOMAD_LANDSCAPE_HPP
#define NOMAD_LANDSCAPE_HPP

// Numerical checks of the population landscape, in the unscaled convention
//   Fbar(W) = tr((I - W)^T S (I - W)),  S = (I - W0)^{-T} (I - W0)^{-1},
//   Lbar(W) = Fbar(W) + lambda h(W) + c/2 h(W)^2,  h = LogDet with s = 1,
// over W1 = {W >= 0, rho(W) < 1}. Here the threshold multiplier is 2 (it is
// 1 for the half-scaled solver objective).
//
// Useful identities, with M = I - W, M0 = I - W0 and C = M0^{-1} M:
//   h(W) = -log det C,   Fbar(W) = ||C||_F^2 >= d exp(-2h/d),
//   grad Lbar = -2 S M + (lambda + c h) M^{-T}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nomad/acyclicity.hpp"
#include "nomad/errors.hpp"
#include "nomad/graphs.hpp"
#include "nomad/linalg.hpp"
#include "nomad/metrics.hpp"
#include "nomad/random.hpp"
#include "nomad/sem.hpp"
#include "nomad/solver.hpp"

namespace nomad {

struct PopulationProblem {
  WeightMatrix w0;
  Covariance sigma_x;
  double lambda = 2.0;
  double c = 1.0;
  double s = 1.0;

  /// Unit-noise population problem for the DAG w0.
  static PopulationProblem make(const WeightMatrix& w0, double lambda, double c) {
    PopulationProblem p{w0, population_covariance(w0, 1.0), lambda, c, 1.0};
    p.validate();
    return p;
  }

  std::size_t d() const noexcept { return w0.dim(); }

  /// Largest entrywise deviation of sigma_x from the covariance implied by
  /// w0, relative to max(1, max|sigma_x|).
  double sigma_inconsistency() const {
    const DenseMatrix expected = population_covariance(w0, 1.0).sigma;
    return max_abs(sigma_x.sigma - expected) / std::max(1.0, max_abs(expected));
  }

  void validate() const {
    if (!is_acyclic(w0)) throw CycleError("population problem needs an acyclic w0");
    if (sigma_x.d() != d()) throw DimensionError("covariance and w0 dimensions differ");
    if (!(c > 0.0)) throw ConfigError("c must be > 0");
    if (!std::isfinite(lambda)) throw ConfigError("lambda must be finite");
    if (s != 1.0) throw ConfigError("the population analysis fixes s = 1");
  }
};

namespace detail {

inline DenseMatrix m_of(const DenseMatrix& w) {
  DenseMatrix m = w * -1.0;
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += 1.0;
  return m;
}

inline AcyclicityEval require_w1(const DenseMatrix& w, const PopulationProblem& prob,
                                 bool with_gradient) {
  if (!w.is_square() || w.rows() != prob.d()) throw DimensionError("dimension mismatch");
  auto h = logdet_acyclicity(w, prob.s, with_gradient);
  if (!h.in_domain) throw DomainError("matrix outside W1 (rho >= 1)");
  return h;
}

}  // namespace detail

/// tr((I - W)^T S (I - W)).
inline double population_score(const DenseMatrix& w, const PopulationProblem& prob) {
  detail::require_w1(w, prob, false);
  const DenseMatrix m = detail::m_of(w);
  return inner(m, multiply(prob.sigma_x.sigma, m));
}

inline double population_score(const WeightMatrix& w, const PopulationProblem& prob) {
  return population_score(w.matrix(), prob);
}

/// Lbar_c(W, lambda).
inline double population_lagrangian(const DenseMatrix& w, const PopulationProblem& prob,
                                    double lambda) {
  const auto h = detail::require_w1(w, prob, false);
  const DenseMatrix m = detail::m_of(w);
  return inner(m, multiply(prob.sigma_x.sigma, m)) + lambda * h.value +
         0.5 * prob.c * h.value * h.value;
}

inline double population_lagrangian(const DenseMatrix& w, const PopulationProblem& prob) {
  return population_lagrangian(w, prob, prob.lambda);
}

/// -2 S M + (lambda + c h) M^{-T} over all entries, diagonal included.
inline DenseMatrix population_gradient(const DenseMatrix& w, const PopulationProblem& prob,
                                       double lambda) {
  const auto h = detail::require_w1(w, prob, true);
  const DenseMatrix m = detail::m_of(w);
  DenseMatrix g = *h.gradient;
  g *= lambda + prob.c * h.value;
  g -= multiply(prob.sigma_x.sigma, m) * 2.0;
  return g;
}

inline DenseMatrix population_gradient(const DenseMatrix& w, const PopulationProblem& prob) {
  return population_gradient(w, prob, prob.lambda);
}

/// ||grad Lbar_c(W, lambda)||_F at prob.lambda.
inline double stationarity_residual(const DenseMatrix& w, const PopulationProblem& prob) {
  return frobenius_norm(population_gradient(w, prob));
}

inline double stationarity_residual(const WeightMatrix& w, const PopulationProblem& prob) {
  return stationarity_residual(w.matrix(), prob);
}

/// phi(t) = d exp(-2t/d) + lambda t + c/2 t^2.
inline double phi(double t, double lambda, double c, std::size_t d) {
  if (!(t >= 0.0)) throw ConfigError("phi requires t >= 0");
  const auto dd = static_cast<double>(d);
  return dd * std::exp(-2.0 * t / dd) + lambda * t + 0.5 * c * t * t;
}

inline double phi_prime(double t, double lambda, double c, std::size_t d) {
  return -2.0 * std::exp(-2.0 * t / static_cast<double>(d)) + lambda + c * t;
}

inline double phi_second(double t, double c, std::size_t d) {
  const auto dd = static_cast<double>(d);
  return (4.0 / dd) * std::exp(-2.0 * t / dd) + c;
}

/// C = (I - W0)^{-1} (I - W).
inline DenseMatrix c_matrix(const DenseMatrix& w, const PopulationProblem& prob) {
  return multiply(inverse(detail::m_of(prob.w0.matrix())), detail::m_of(w));
}

/// Random member of W1: each off-diagonal position (and the diagonal when
/// zero_diagonal is false) is present with a per-sample density drawn
/// uniformly from (0, 1], entries are uniform on [0, 1], and the matrix is
/// rescaled by 0.9 / rho when rho >= 1.
inline DenseMatrix sample_w1(std::size_t d, Rng& rng, bool zero_diagonal = true) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double density = 1.0 - unit(rng);
  DenseMatrix w(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (zero_diagonal && i == j) continue;
      const double keep = unit(rng);
      const double v = unit(rng);
      if (keep < density) w(i, j) = v;
    }
  }
  const double rho = spectral_radius_nonneg(w);
  if (rho >= 1.0) w *= 0.9 / rho;
  // Guard against a radius estimate that lands marginally below the truth.
  while (!logdet_acyclicity(w, 1.0, false).in_domain) w *= 0.9;
  return w;
}

/// Strictly positive member of W1 (every entry, diagonal included, > 0).
inline DenseMatrix sample_w1_interior(std::size_t d, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DenseMatrix w(d, d);
  for (double& v : w.entries()) v = 0.05 + 0.95 * unit(rng);
  const double rho = spectral_radius_nonneg(w);
  if (rho >= 1.0) w *= 0.9 / rho;
  while (!logdet_acyclicity(w, 1.0, false).in_domain) w *= 0.9;
  return w;
}

struct LowerBoundReport {
  std::size_t samples = 0;
  /// Samples with Lbar < phi(h) - tol.
  std::size_t bound_violations = 0;
  /// Samples with phi(h) < d - tol.
  std::size_t phi_violations = 0;
  /// Samples with Fbar < d exp(-2h/d) - tol.
  std::size_t amgm_violations = 0;
  double worst_bound_margin = std::numeric_limits<double>::infinity();
  double worst_phi_margin = std::numeric_limits<double>::infinity();
  double worst_amgm_margin = std::numeric_limits<double>::infinity();
  /// Largest |h(W) + log det C| over the samples.
  double worst_h_identity_gap = 0.0;
  std::uint64_t seed = 0;
  double tol = 1e-9;

  bool passed() const noexcept {
    return samples > 0 && bound_violations == 0 && phi_violations == 0 && amgm_violations == 0;
  }
};

/// Samples W in W1 and checks Lbar(W) >= phi(h(W)) >= d together with the
/// AM-GM bound Fbar(W) >= d exp(-2h/d).
inline LowerBoundReport check_lower_bound(const PopulationProblem& prob,
                                          std::size_t num_samples, std::uint64_t seed,
                                          double tol = 1e-9) {
  if (prob.lambda < 2.0) throw ConfigError("the lower bound requires lambda >= 2");
  LowerBoundReport r;
  r.seed = seed;
  r.tol = tol;
  const std::size_t d = prob.d();
  const auto dd = static_cast<double>(d);
  const DenseMatrix m0_inv = inverse(detail::m_of(prob.w0.matrix()));
  Rng rng(seed);
  for (std::size_t k = 0; k < num_samples; ++k) {
    const DenseMatrix w = sample_w1(d, rng);
    const auto h = detail::require_w1(w, prob, false);
    const DenseMatrix m = detail::m_of(w);
    const double f = inner(m, multiply(prob.sigma_x.sigma, m));
    const double lag = f + prob.lambda * h.value + 0.5 * prob.c * h.value * h.value;
    const double ph = phi(h.value, prob.lambda, prob.c, d);

    const double bound_margin = lag - ph;
    const double phi_margin = ph - dd;
    const double amgm_margin = f - dd * std::exp(-2.0 * h.value / dd);
    r.worst_bound_margin = std::min(r.worst_bound_margin, bound_margin);
    r.worst_phi_margin = std::min(r.worst_phi_margin, phi_margin);
    r.worst_amgm_margin = std::min(r.worst_amgm_margin, amgm_margin);
    if (bound_margin < -tol) ++r.bound_violations;
    if (phi_margin < -tol) ++r.phi_violations;
    if (amgm_margin < -tol) ++r.amgm_violations;

    const auto ld = lu_factor(multiply(m0_inv, m)).signed_log_abs_det();
    if (ld && ld->first > 0) {
      r.worst_h_identity_gap = std::max(r.worst_h_identity_gap, std::abs(h.value + ld->second));
    } else {
      r.worst_h_identity_gap = std::numeric_limits<double>::infinity();
    }
    ++r.samples;
  }
  return r;
}

struct DescentOptions {
  std::size_t max_iters = 2000;
  /// Gradient norm at which a run counts as an interior stationary point.
  double converge_tol = 1e-6;
  double armijo = 1e-4;
  /// Budget and projected-residual stop of the projected variant.
  std::size_t projected_max_iters = 5000;
  double projected_tol = 1e-10;
};

enum class DescentOutcome { InteriorConverged, HitBoundary, KktConverged, Exhausted, Stalled };

inline std::string to_string(DescentOutcome o) {
  switch (o) {
    case DescentOutcome::InteriorConverged: return "interior_converged";
    case DescentOutcome::HitBoundary: return "hit_boundary";
    case DescentOutcome::KktConverged: return "kkt_converged";
    case DescentOutcome::Exhausted: return "exhausted";
    case DescentOutcome::Stalled: return "stalled";
  }
  return "?";
}

struct DescentRun {
  DescentOutcome outcome = DescentOutcome::Exhausted;
  std::size_t iterations = 0;
  double final_residual = 0.0;
  double min_residual = std::numeric_limits<double>::infinity();
  double nerr_to_truth = std::numeric_limits<double>::infinity();
  /// max_i |sigma_i(C) - exp(-h/d)| at the final iterate.
  double singular_value_spread = 0.0;
  /// h at the final iterate.
  double h = 0.0;
};

namespace detail {

// Distance to the truth and the singular-value spread of C at the endpoint.
inline void summarize_run(const PopulationProblem& prob, const DenseMatrix& w, DescentRun& run) {
  if (prob.w0.edge_count() > 0) {
    run.nerr_to_truth = nerr(w, prob.w0.matrix());
  } else {
    run.nerr_to_truth = frobenius_norm(w);
  }
  const auto h = logdet_acyclicity(w, prob.s, false);
  run.h = h.value;
  const double target = std::exp(-h.value / static_cast<double>(prob.d()));
  for (double sv : singular_values(c_matrix(w, prob))) {
    run.singular_value_spread = std::max(run.singular_value_spread, std::abs(sv - target));
  }
}

}  // namespace detail

/// Gradient descent on Lbar(., prob.lambda) over the full matrix from an
/// interior start. A run ends when the gradient norm reaches converge_tol,
/// when a descent step reaches the boundary of the non-negative cone, or
/// when the iteration budget is exhausted.
inline DescentRun interior_descent(const PopulationProblem& prob, DenseMatrix w,
                                   const DescentOptions& opt = {}) {
  DescentRun run;
  double value = population_lagrangian(w, prob);
  double eta = 1e-2;
  for (; run.iterations < opt.max_iters; ++run.iterations) {
    const DenseMatrix g = population_gradient(w, prob);
    const double res = frobenius_norm(g);
    run.final_residual = res;
    run.min_residual = std::min(run.min_residual, res);
    if (res <= opt.converge_tol) {
      run.outcome = DescentOutcome::InteriorConverged;
      break;
    }
    // Largest step keeping every entry non-negative.
    double to_boundary = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < w.entries().size(); ++k) {
      const double gk = g.entries()[k];
      if (gk > 0.0) to_boundary = std::min(to_boundary, w.entries()[k] / gk);
    }
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value));
    bool accepted = false, boundary = false;
    while (eta > 1e-18) {
      const bool clipped = eta >= to_boundary;
      const double step = clipped ? to_boundary : eta;
      DenseMatrix cand = w - g * step;
      for (double& v : cand.entries()) v = std::max(v, 0.0);
      const auto h = logdet_acyclicity(cand, prob.s, false);
      if (h.in_domain) {
        const DenseMatrix m = detail::m_of(cand);
        const double next = inner(m, multiply(prob.sigma_x.sigma, m)) +
                            prob.lambda * h.value + 0.5 * prob.c * h.value * h.value;
        if (next <= value - opt.armijo * step * res * res + slack) {
          w = std::move(cand);
          value = next;
          accepted = true;
          boundary = clipped;
          break;
        }
      }
      eta *= 0.5;
    }
    if (!accepted) {
      run.outcome = DescentOutcome::Stalled;
      break;
    }
    if (boundary) {
      run.outcome = DescentOutcome::HitBoundary;
      run.final_residual = frobenius_norm(population_gradient(w, prob));
      run.min_residual = std::min(run.min_residual, run.final_residual);
      ++run.iterations;
      break;
    }
    eta *= 2.0;
  }
  detail::summarize_run(prob, w, run);
  return run;
}

/// Projected gradient descent on Lbar(., prob.lambda) over the non-negative
/// part of W1, diagonal included. Unlike interior_descent it continues along
/// the boundary, so its limits are KKT points of the cone-constrained
/// problem; min_residual still tracks the full (unprojected) gradient norm.
inline DescentRun projected_descent(const PopulationProblem& prob, DenseMatrix w,
                                    const DescentOptions& opt = {}) {
  DescentRun run;
  double value = population_lagrangian(w, prob);
  double eta = 1e-2;
  std::optional<DenseMatrix> w_prev, g_prev;
  for (; run.iterations < opt.projected_max_iters; ++run.iterations) {
    const DenseMatrix g = population_gradient(w, prob);
    // Barzilai-Borwein trial step from the last accepted move.
    if (w_prev) {
      const DenseMatrix sw = w - *w_prev, yg = g - *g_prev;
      const double sy = inner(sw, yg);
      if (sy > 0.0) eta = std::clamp(inner(sw, sw) / sy, 1e-10, 1e10);
    }
    run.final_residual = frobenius_norm(g);
    run.min_residual = std::min(run.min_residual, run.final_residual);
    DenseMatrix target = w - g;
    for (double& v : target.entries()) v = std::max(v, 0.0);
    if (frobenius_norm(w - target) <= opt.projected_tol) {
      run.outcome = DescentOutcome::KktConverged;
      break;
    }
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value));
    bool accepted = false;
    while (eta > 1e-18) {
      DenseMatrix cand = w - g * eta;
      for (double& v : cand.entries()) v = std::max(v, 0.0);
      const auto h = logdet_acyclicity(cand, prob.s, false);
      if (h.in_domain) {
        const DenseMatrix m = detail::m_of(cand);
        const double next = inner(m, multiply(prob.sigma_x.sigma, m)) +
                            prob.lambda * h.value + 0.5 * prob.c * h.value * h.value;
        // Armijo condition along the projection arc.
        if (next <= value - opt.armijo * inner(g, w - cand) + slack) {
          w_prev = std::move(w);
          g_prev = g;
          w = std::move(cand);
          value = next;
          accepted = true;
          break;
        }
      }
      eta *= 0.5;
    }
    if (!accepted) {
      run.outcome = DescentOutcome::Stalled;
      break;
    }
  }
  if (run.outcome != DescentOutcome::KktConverged && run.outcome != DescentOutcome::Stalled) {
    run.final_residual = frobenius_norm(population_gradient(w, prob));
    run.min_residual = std::min(run.min_residual, run.final_residual);
  }
  detail::summarize_run(prob, w, run);
  return run;
}

struct StationarySearchReport {
  double lambda = 0.0;
  std::size_t runs = 0;
  std::size_t interior_converged = 0;
  std::size_t hit_boundary = 0;
  std::size_t exhausted = 0;
  std::size_t stalled = 0;
  /// Interior-converged runs whose limit has nerr <= truth_tol to W0.
  std::size_t converged_to_truth = 0;
  /// Projected runs whose endpoint has full gradient norm <= residual_floor,
  /// and how many of those endpoints are W0.
  std::size_t projected_stationary = 0;
  std::size_t projected_to_truth = 0;
  /// Projected runs ending at a cone KKT point that is not stationary, and
  /// the smallest h among those endpoints (an acyclic one would contradict
  /// KKT uniqueness).
  std::size_t projected_other_kkt = 0;
  double min_h_other_kkt = std::numeric_limits<double>::infinity();
  /// Smallest full gradient norm seen along any run of either kind.
  double min_residual = std::numeric_limits<double>::infinity();
  /// Largest singular-value spread over stationary endpoints.
  double max_singular_value_spread = 0.0;
  double residual_floor = 1e-4;
  double truth_tol = 1e-4;
  std::uint64_t seed = 0;

  /// lambda > 2: no run gets below residual_floor. lambda = 2: every
  /// stationary endpoint found is W0, and at least one projected run found
  /// one.
  bool passed() const noexcept {
    if (lambda > 2.0) return min_residual > residual_floor;
    return converged_to_truth == interior_converged && projected_stationary > 0 &&
           projected_to_truth == projected_stationary;
  }
};

/// Interior and projected descent from num_inits random strictly positive
/// starts. Finding no spurious stationary point is evidence, not proof, of
/// their absence.
inline StationarySearchReport search_stationary_points(const PopulationProblem& prob,
                                                       std::size_t num_inits,
                                                       std::uint64_t seed,
                                                       const DescentOptions& opt = {}) {
  StationarySearchReport r;
  r.lambda = prob.lambda;
  r.seed = seed;
  Rng rng(seed);
  for (std::size_t k = 0; k < num_inits; ++k) {
    const DenseMatrix start = sample_w1_interior(prob.d(), rng);
    const DescentRun proj = projected_descent(prob, start, opt);
    r.min_residual = std::min(r.min_residual, proj.min_residual);
    if (proj.final_residual <= r.residual_floor) {
      ++r.projected_stationary;
      if (proj.nerr_to_truth <= r.truth_tol) ++r.projected_to_truth;
      r.max_singular_value_spread =
          std::max(r.max_singular_value_spread, proj.singular_value_spread);
    } else if (proj.outcome == DescentOutcome::KktConverged) {
      ++r.projected_other_kkt;
      r.min_h_other_kkt = std::min(r.min_h_other_kkt, proj.h);
    }
    const DescentRun run = interior_descent(prob, start, opt);
    ++r.runs;
    r.min_residual = std::min(r.min_residual, run.min_residual);
    switch (run.outcome) {
      case DescentOutcome::InteriorConverged:
        ++r.interior_converged;
        if (run.nerr_to_truth <= r.truth_tol) ++r.converged_to_truth;
        r.max_singular_value_spread =
            std::max(r.max_singular_value_spread, run.singular_value_spread);
        break;
      case DescentOutcome::HitBoundary: ++r.hit_boundary; break;
      case DescentOutcome::KktConverged:
      case DescentOutcome::Exhausted: ++r.exhausted; break;
      case DescentOutcome::Stalled: ++r.stalled; break;
    }
  }
  return r;
}

/// First-order conditions at the threshold multiplier, with
/// A(W) = 1/2 grad Lbar_c(W, 2) = -S M + (1 + c/2 h) M^{-T}.
struct KktResidual {
  DenseMatrix grad;
  /// Smallest entry of A (non-negative at a KKT point).
  double min_grad_entry = 0.0;
  /// ||W o A||_F.
  double complementarity = 0.0;
  /// |tr A - <I - W, A>|.
  double trace_identity_gap = 0.0;

  /// max(0, -min entry of A) combined with complementarity.
  double violation() const noexcept {
    return std::max(std::max(0.0, -min_grad_entry), complementarity);
  }
};

inline KktResidual kkt_residual(const DenseMatrix& w, const PopulationProblem& prob) {
  const auto h = detail::require_w1(w, prob, true);
  const DenseMatrix m = detail::m_of(w);
  DenseMatrix a = *h.gradient;
  a *= 1.0 + 0.5 * prob.c * h.value;
  a -= multiply(prob.sigma_x.sigma, m);
  KktResidual r{a, 0.0, 0.0, 0.0};
  r.min_grad_entry = *std::min_element(a.entries().begin(), a.entries().end());
  r.complementarity = frobenius_norm(hadamard(w, a));
  r.trace_identity_gap = std::abs(trace(a) - inner(m, a));
  return r;
}

inline KktResidual kkt_residual(const WeightMatrix& w, const PopulationProblem& prob) {
  return kkt_residual(w.matrix(), prob);
}

struct KktCandidate {
  bool solver_ok = true;
  std::string error;
  bool converged = false;
  std::size_t outer_iters = 0;
  double h = 0.0;
  double nerr_to_truth = 0.0;
  std::size_t shd_to_truth = 0;
  double min_grad_entry = 0.0;
  double complementarity = 0.0;
  double trace_identity_gap = 0.0;
  double stationarity = 0.0;
  bool certified = false;
  bool matches_truth = false;
};

struct KktUniquenessReport {
  std::size_t candidates = 0;
  std::size_t certified = 0;
  std::size_t excluded_infeasible = 0;
  std::size_t excluded_kkt = 0;
  std::size_t solver_failures = 0;
  /// Certified candidates that differ from W0.
  std::size_t mismatches = 0;
  double h_tol = 1e-8;
  double kkt_tol = 1e-6;
  double truth_tol = 1e-4;
  std::uint64_t seed = 0;
  std::vector<KktCandidate> records;

  bool passed() const noexcept { return mismatches == 0; }
};

/// Solver settings used for population certification runs.
inline SolverConfig population_solver_config() {
  SolverConfig cfg;
  cfg.alpha = 0.0;
  cfg.inner_tol = 1e-10;
  cfg.inner_max_iters = 300;
  cfg.refit_support = true;
  return cfg;
}

/// Runs the multiplier method on the population covariance from
/// num_candidates random W1 starts, then checks each feasible KKT output
/// against W0.
inline KktUniquenessReport verify_acyclic_kkt_uniqueness(
    const PopulationProblem& prob, std::size_t num_candidates, std::uint64_t seed,
    const SolverConfig& cfg = population_solver_config()) {
  KktUniquenessReport r;
  r.seed = seed;
  Rng rng(seed);
  const bool trivial_truth = prob.w0.edge_count() == 0;
  for (std::size_t k = 0; k < num_candidates; ++k) {
    KktCandidate cand;
    ++r.candidates;
    const DenseMatrix init = sample_w1(prob.d(), rng);
    try {
      const SolveResult res = solve(prob.sigma_x, cfg, WeightMatrix(init));
      cand.converged = res.converged;
      cand.outer_iters = res.outer_iters;
      cand.h = res.final_h;
      cand.nerr_to_truth = trivial_truth ? frobenius_norm(res.w_raw.matrix())
                                         : nerr(res.w_raw, prob.w0);
      cand.shd_to_truth = shd(res.w_dag, prob.w0);
      const KktResidual kkt = kkt_residual(res.w_raw, prob);
      cand.min_grad_entry = kkt.min_grad_entry;
      cand.complementarity = kkt.complementarity;
      cand.trace_identity_gap = kkt.trace_identity_gap;
      cand.stationarity = frobenius_norm(population_gradient(res.w_raw.matrix(), prob, 2.0));
      if (cand.h > r.h_tol) {
        ++r.excluded_infeasible;
      } else if (kkt.violation() > r.kkt_tol) {
        ++r.excluded_kkt;
      } else {
        cand.certified = true;
        ++r.certified;
        cand.matches_truth = cand.nerr_to_truth <= r.truth_tol;
        if (!cand.matches_truth) ++r.mismatches;
      }
    } catch (const Error& e) {
      cand.solver_ok = false;
      cand.error = e.what();
      ++r.solver_failures;
    }
    r.records.push_back(std::move(cand));
  }
  return r;
}

}  // namespace nomad

#endif  // NOMAD_LANDSCAPE_HPP
