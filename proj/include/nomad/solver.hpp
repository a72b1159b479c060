#ifndef NOMAD_SOLVER_HPP
#define NOMAD_SOLVER_HPP

// Non-negative DAG learning by the method of multipliers.
//
// Score (half-scaled least squares, written through the covariance):
//   F(W) = 1/2 tr((I - W)^T S (I - W)) + alpha * sum_{i != j} W_ij
// Augmented Lagrangian:
//   L_c(W, lambda) = F(W) + lambda h(W) + c/2 h(W)^2
// Each outer iteration minimizes L_c over {W >= 0, diag W = 0, W in dom h}
// starting from the previous iterate, then updates
//   lambda <- lambda + c h(W),   c <- beta c  if h(W_new) > gamma h(W_old).
//
// With the half-scaled score the population threshold multiplier is 1; the
// landscape module uses the unscaled score, where it is 2.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nomad/acyclicity.hpp"
#include "nomad/errors.hpp"
#include "nomad/graphs.hpp"
#include "nomad/linalg.hpp"
#include "nomad/sem.hpp"

namespace nomad {

enum class InnerMethod {
  /// W <- P(W - eta grad L) with backtracking.
  ProjectedGradient,
  /// Accelerated projected gradient with restart.
  Fista,
  /// Two-metric projected Newton with per-column Hessian blocks.
  ProjectedNewton,
};

inline std::string to_string(InnerMethod m) {
  switch (m) {
    case InnerMethod::ProjectedGradient: return "pg";
    case InnerMethod::Fista: return "fista";
    case InnerMethod::ProjectedNewton: return "newton";
  }
  return "?";
}

inline InnerMethod parse_inner_method(const std::string& s) {
  if (s == "pg") return InnerMethod::ProjectedGradient;
  if (s == "fista") return InnerMethod::Fista;
  if (s == "newton") return InnerMethod::ProjectedNewton;
  throw ConfigError("unknown inner method '" + s + "'");
}

struct SolverConfig {
  /// Sparsity weight. Unset means 0.05 sqrt(log d / n) for data and 0 for a
  /// covariance passed directly.
  std::optional<double> alpha;
  double lambda0 = 0.0;
  double c0 = 1.0;
  double beta = 5.0;
  double gamma = 0.25;
  double eta0 = 1e-2;
  double inner_tol = 1e-6;
  std::size_t inner_max_iters = 5000;
  std::size_t outer_max_iters = 20;
  double h_tol = 1e-8;
  AcyclicityKind acyclicity = AcyclicityKind::log_det(1.0);
  /// Selects FISTA over plain projected gradient when newton_scaling is off.
  bool use_fista = false;
  /// Scales projected steps by per-column Hessian blocks.
  bool newton_scaling = true;
  double threshold_tau = 0.3;
  /// After convergence, re-minimizes on the support of w_dag with every other
  /// entry pinned at zero, and reports that point as w_raw.
  bool refit_support = false;
  /// Known noise variance; the covariance is divided by it before solving.
  std::optional<double> known_sigma2;

  InnerMethod inner_method() const noexcept {
    if (newton_scaling) return InnerMethod::ProjectedNewton;
    return use_fista ? InnerMethod::Fista : InnerMethod::ProjectedGradient;
  }

  void validate() const {
    if (alpha && !(*alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (!std::isfinite(lambda0)) throw ConfigError("lambda0 must be finite");
    if (!(c0 > 0.0)) throw ConfigError("c0 must be > 0");
    if (!(beta > 1.0)) throw ConfigError("beta must be > 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (!(eta0 > 0.0)) throw ConfigError("eta0 must be > 0");
    if (!(inner_tol > 0.0)) throw ConfigError("inner_tol must be > 0");
    if (!(h_tol > 0.0)) throw ConfigError("h_tol must be > 0");
    if (inner_max_iters < 1) throw ConfigError("inner_max_iters must be >= 1");
    if (outer_max_iters < 1) throw ConfigError("outer_max_iters must be >= 1");
    if (!(threshold_tau >= 0.0)) throw ConfigError("threshold_tau must be >= 0");
    if (known_sigma2 && !(*known_sigma2 > 0.0)) throw ConfigError("known_sigma2 must be > 0");
    acyclicity.validate();
  }
};

/// Floor and infeasibility scale of the per-stage inner tolerance used by solve.
constexpr double kMinInnerTol = 1e-12;
constexpr double kInnerTolPerH = 0.1;

inline double default_alpha(std::size_t d, std::size_t n) {
  return 0.05 * std::sqrt(std::log(static_cast<double>(d)) / static_cast<double>(n));
}

struct SolverState {
  WeightMatrix w;
  double lambda = 0.0;
  double c = 1.0;
  /// Current inner stepsize, carried across outer iterations.
  double eta = 1e-2;
  std::vector<double> h_history;
  std::vector<double> objective_history;
  std::vector<double> lambda_history;
  std::vector<double> c_history;
  std::vector<std::size_t> inner_iters_used;

  SolverState(WeightMatrix w0, double lambda0, double c0, double eta0)
      : w(std::move(w0)), lambda(lambda0), c(c0), eta(eta0) {}
};

struct SolveResult {
  WeightMatrix w_raw;
  WeightMatrix w_dag;
  bool converged = false;
  double final_h = 0.0;
  std::size_t outer_iters = 0;
  double wall_time = 0.0;
  double alpha = 0.0;
  SolverState state;
};

namespace detail {

inline void require_matching(const DenseMatrix& w, const DenseMatrix& cov) {
  if (!w.is_square() || !cov.is_square() || w.rows() != cov.rows()) {
    throw DimensionError("weight matrix and covariance dimensions differ");
  }
}

inline double offdiag_sum(const DenseMatrix& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j)
      if (i != j) s += w(i, j);
  return s;
}

/// Projection onto {W >= 0, diag W = 0}.
inline void project_in_place(DenseMatrix& w) {
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j)
      if (i == j || w(i, j) < 0.0) w(i, j) = 0.0;
}

}  // namespace detail

inline double score(const DenseMatrix& w, const DenseMatrix& cov, double alpha) {
  detail::require_matching(w, cov);
  const DenseMatrix m = DenseMatrix::identity(w.rows()) - w;
  return 0.5 * inner(m, multiply(cov, m)) + alpha * detail::offdiag_sum(w);
}

inline double score(const WeightMatrix& w, const Covariance& cov, double alpha) {
  return score(w.matrix(), cov.sigma, alpha);
}

/// cov (W - I) + alpha (11^T - I).
inline DenseMatrix score_gradient(const DenseMatrix& w, const DenseMatrix& cov,
                                  double alpha) {
  detail::require_matching(w, cov);
  const std::size_t d = w.rows();
  DenseMatrix g = multiply(cov, w - DenseMatrix::identity(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j) g(i, j) += alpha;
  return g;
}

inline DenseMatrix score_gradient(const WeightMatrix& w, const Covariance& cov,
                                  double alpha) {
  return score_gradient(w.matrix(), cov.sigma, alpha);
}

/// L_c(., lambda) and its pieces at one point.
struct LagrangianPoint {
  double value = 0.0;
  double h = 0.0;
  std::optional<DenseMatrix> gradient;
  std::optional<DenseMatrix> h_gradient;
};

/// L_c(W, lambda) for fixed covariance and hyperparameters.
class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const DenseMatrix& cov, double alpha, AcyclicityKind kind,
                      double lambda, double c)
      : cov_(cov), alpha_(alpha), kind_(kind), lambda_(lambda), c_(c) {}

  double lambda() const noexcept { return lambda_; }
  double c() const noexcept { return c_; }
  const DenseMatrix& covariance() const noexcept { return cov_; }

  /// nullopt when w lies outside the domain of h.
  /// L(cand) - L(w) given the evaluation p at w, formed without subtracting
  /// two large values: the score part is <D, S((W + W')/2 - I)> with
  /// D = W' - W. nullopt when cand lies outside the domain.
  std::optional<double> change(const DenseMatrix& w, const LagrangianPoint& p,
                               const DenseMatrix& cand) const {
    AcyclicityEval h;
    try {
      h = evaluate_acyclicity(kind_, cand, false);
    } catch (const OverflowError&) {
      return std::nullopt;
    }
    if (!h.in_domain) return std::nullopt;
    const std::size_t d = w.rows();
    const DenseMatrix delta = cand - w;
    DenseMatrix mid = w + cand;
    mid *= 0.5;
    for (std::size_t i = 0; i < d; ++i) mid(i, i) -= 1.0;
    const double dh = h.value - p.h;
    return inner(delta, multiply(cov_, mid)) + alpha_ * detail::offdiag_sum(delta) +
           dh * (lambda_ + 0.5 * c_ * (h.value + p.h));
  }

  std::optional<LagrangianPoint> evaluate(const DenseMatrix& w, bool with_gradient) const {
    AcyclicityEval h;
    try {
      h = evaluate_acyclicity(kind_, w, with_gradient);
    } catch (const OverflowError&) {
      return std::nullopt;
    }
    if (!h.in_domain) return std::nullopt;
    const std::size_t d = w.rows();
    const DenseMatrix m = DenseMatrix::identity(d) - w;
    const DenseMatrix sm = multiply(cov_, m);
    LagrangianPoint p;
    p.h = h.value;
    p.value = 0.5 * inner(m, sm) + alpha_ * detail::offdiag_sum(w) + lambda_ * h.value +
              0.5 * c_ * h.value * h.value;
    if (with_gradient) {
      DenseMatrix g = *h.gradient;
      g *= lambda_ + c_ * h.value;
      g -= sm;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          if (i != j) g(i, j) += alpha_;
      p.gradient = std::move(g);
      p.h_gradient = std::move(h.gradient);
    }
    return p;
  }

 private:
  const DenseMatrix& cov_;
  double alpha_;
  AcyclicityKind kind_;
  double lambda_;
  double c_;
};

inline double augmented_lagrangian(const WeightMatrix& w, const Covariance& cov,
                                   double alpha, const AcyclicityKind& kind, double lambda,
                                   double c) {
  detail::require_matching(w.matrix(), cov.sigma);
  const auto p = AugmentedLagrangian(cov.sigma, alpha, kind, lambda, c)
                     .evaluate(w.matrix(), false);
  if (!p) throw DomainError("iterate outside the acyclicity domain");
  return p->value;
}

/// grad F(W) + (lambda + c h(W)) grad h(W).
inline DenseMatrix augmented_lagrangian_gradient(const WeightMatrix& w, const Covariance& cov,
                                                 double alpha, const AcyclicityKind& kind,
                                                 double lambda, double c) {
  detail::require_matching(w.matrix(), cov.sigma);
  auto p = AugmentedLagrangian(cov.sigma, alpha, kind, lambda, c).evaluate(w.matrix(), true);
  if (!p) throw DomainError("iterate outside the acyclicity domain");
  return std::move(*p->gradient);
}

/// ||W - P(W - G)||_F, the projected-gradient stationarity measure.
inline double projected_gradient_residual(const DenseMatrix& w, const DenseMatrix& g) {
  DenseMatrix step = w - g;
  detail::project_in_place(step);
  return frobenius_norm(w - step);
}

struct InnerResult {
  WeightMatrix w;
  std::size_t iterations = 0;
  double residual = 0.0;
  double value = 0.0;
  double h = 0.0;
};

namespace detail {

constexpr double kMinStep = 1e-16;

// Rounding allowance for comparisons of objective changes.
inline double comparison_slack(double value) {
  return 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value));
}

inline InnerResult run_projected_gradient(const AugmentedLagrangian& lag, DenseMatrix w,
                                          double& eta, const SolverConfig& cfg,
                                          bool accelerate) {
  auto cur = lag.evaluate(w, true);
  if (!cur) throw DomainError("inner solve started outside the acyclicity domain");

  DenseMatrix w_prev = w;
  double t_prev = 1.0;
  double residual = projected_gradient_residual(w, *cur->gradient);
  std::size_t it = 0;
  for (; it < cfg.inner_max_iters; ++it) {
    residual = projected_gradient_residual(w, *cur->gradient);
    if (residual <= cfg.inner_tol) break;

    DenseMatrix y = w;
    std::optional<LagrangianPoint> ycur;
    double t_next = 1.0;
    if (accelerate) {
      t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
      const double mom = (t_prev - 1.0) / t_next;
      if (mom > 0.0) {
        y = w + (w - w_prev) * mom;
        project_in_place(y);
        ycur = lag.evaluate(y, true);
        if (!ycur) {
          y = w;
          t_next = 1.0;
        }
      }
    }
    const LagrangianPoint& base = ycur ? *ycur : *cur;
    const double slack = comparison_slack(base.value);

    DenseMatrix cand = y;
    while (true) {
      cand = y - *base.gradient * eta;
      project_in_place(cand);
      const auto diff = lag.change(y, base, cand);
      if (diff) {
        const DenseMatrix delta = cand - y;
        const double bound = inner(*base.gradient, delta) + inner(delta, delta) / (2.0 * eta);
        if (*diff <= bound + slack) break;
      }
      eta *= 0.5;
      if (eta < kMinStep) {
        throw LineSearchStall("stepsize underflow at inner iteration " + std::to_string(it));
      }
    }
    auto next = lag.evaluate(cand, true);
    if (!next) throw DomainError("accepted iterate left the domain");
    if (accelerate && next->value > cur->value + comparison_slack(cur->value)) {
      // Momentum overshot: restart from the current iterate.
      t_prev = 1.0;
      w_prev = w;
      continue;
    }
    w_prev = std::move(w);
    w = std::move(cand);
    cur = std::move(next);
    t_prev = accelerate ? t_next : 1.0;
    eta *= 1.5;
  }
  if (it == cfg.inner_max_iters) residual = projected_gradient_residual(w, *cur->gradient);
  return {WeightMatrix(std::move(w)), it, residual, cur->value, cur->h};
}

// Two-metric projected truncated Newton. Coordinates within eps of zero with
// a positive gradient are held at the bound and moved along -g; on the
// remaining (free) coordinates the Newton system H_FF p = -g_F is solved by
// preconditioned conjugate gradients, stopping early on negative curvature.
//
// Hessian-vector product of L_c with B = grad h:
//   LogDet:  H[V] = S V + (lambda + c h) B V^T B + c <B, V> B
//   MatExp:  H[V] = S V + (lambda + c h) D(grad h)[V] + c <B, V> B, with
//            the directional derivative taken by a forward difference.
// The preconditioner is the column-j diagonal block
//   S_FF + kappa u u^T,  u = column j of B,  kappa = lambda + c (1 + h),
// which is exact for LogDet up to cross-column coupling, applied through a
// cached Cholesky factor and a Sherman-Morrison correction.
class NewtonSystem {
 public:
  NewtonSystem(const AugmentedLagrangian& lag, const DenseMatrix& w, const LagrangianPoint& p,
               std::vector<std::vector<std::size_t>> free_rows,
               std::vector<std::optional<Cholesky>>& chol)
      : lag_(lag), w_(w), p_(p), free_(std::move(free_rows)), chol_(chol) {}

  void mask(DenseMatrix& v) const {
    const std::size_t d = v.rows();
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<bool> keep(d, false);
      for (std::size_t i : free_[j]) keep[i] = true;
      for (std::size_t i = 0; i < d; ++i)
        if (!keep[i]) v(i, j) = 0.0;
    }
  }

  DenseMatrix apply(const DenseMatrix& v) const {
    const DenseMatrix& b = *p_.h_gradient;
    const double weight = lag_.lambda() + lag_.c() * p_.h;
    DenseMatrix out = multiply(lag_.covariance(), v);
    if (weight != 0.0) {
      DenseMatrix curv(v.rows(), v.cols());
      if (is_logdet_) {
        curv = multiply(multiply(b, transpose(v)), b);
      } else {
        const double nv = frobenius_norm(v);
        const double step = nv > 0.0 ? 1e-7 * (1.0 + max_abs(w_)) / nv : 0.0;
        if (step > 0.0) {
          DenseMatrix shifted = w_ + v * step;
          for (double& x : shifted.entries()) x = std::max(x, 0.0);
          const auto e = evaluate_acyclicity(AcyclicityKind::mat_exp(), shifted, true);
          curv = (*e.gradient - b) * (1.0 / step);
        }
      }
      curv *= weight;
      out += curv;
    }
    out += b * (lag_.c() * inner(b, v));
    mask(out);
    return out;
  }

  DenseMatrix precondition(const DenseMatrix& r) const {
    const DenseMatrix& b = *p_.h_gradient;
    const double kappa = std::max(0.0, lag_.lambda() + lag_.c() * (1.0 + p_.h));
    DenseMatrix z(r.rows(), r.cols());
    std::vector<double> x, u, hu;
    for (std::size_t j = 0; j < r.cols(); ++j) {
      const auto& f = free_[j];
      if (f.empty()) continue;
      const std::size_t k = f.size();
      x.assign(k, 0.0);
      u.assign(k, 0.0);
      for (std::size_t a = 0; a < k; ++a) {
        x[a] = r(f[a], j);
        u[a] = b(f[a], j);
      }
      if (chol_[j]) {
        chol_[j]->solve_in_place(x);
        if (kappa > 0.0) {
          hu = u;
          chol_[j]->solve_in_place(hu);
          double ux = 0.0, uhu = 0.0;
          for (std::size_t a = 0; a < k; ++a) {
            ux += u[a] * x[a];
            uhu += u[a] * hu[a];
          }
          const double coef = kappa * ux / (1.0 + kappa * uhu);
          for (std::size_t a = 0; a < k; ++a) x[a] -= coef * hu[a];
        }
      }
      for (std::size_t a = 0; a < k; ++a) z(f[a], j) = x[a];
    }
    return z;
  }

  void set_logdet(bool v) { is_logdet_ = v; }

 private:
  const AugmentedLagrangian& lag_;
  const DenseMatrix& w_;
  const LagrangianPoint& p_;
  std::vector<std::vector<std::size_t>> free_;
  std::vector<std::optional<Cholesky>>& chol_;
  bool is_logdet_ = true;
};

// Entries flagged in pinned (row-major) stay at zero throughout.
inline InnerResult run_projected_newton(const AugmentedLagrangian& lag, DenseMatrix w,
                                        const SolverConfig& cfg,
                                        const std::vector<bool>* pinned = nullptr) {
  const DenseMatrix& cov = lag.covariance();
  const std::size_t d = w.rows();
  auto cur = lag.evaluate(w, true);
  if (!cur) throw DomainError("inner solve started outside the acyclicity domain");

  double ridge = 0.0;
  for (std::size_t i = 0; i < d; ++i) ridge = std::max(ridge, cov(i, i));
  ridge = 1e-12 * std::max(ridge, 1.0);
  constexpr double kArmijo = 1e-4;
  constexpr double kActiveEps = 1e-5;
  constexpr std::size_t kMaxHoldPasses = 4;
  const std::size_t cg_cap = std::max<std::size_t>(20, d * (d - 1) / 2);

  std::vector<std::vector<std::size_t>> cached_free(d);
  std::vector<std::optional<Cholesky>> chol(d);
  std::vector<bool> have_factor(d, false);

  auto refresh_factors = [&](const std::vector<std::vector<std::size_t>>& free_rows) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto& f = free_rows[j];
      if (have_factor[j] && cached_free[j] == f) continue;
      chol[j].reset();
      if (!f.empty()) {
        DenseMatrix block(f.size(), f.size());
        for (std::size_t a = 0; a < f.size(); ++a) {
          for (std::size_t b = 0; b < f.size(); ++b) block(a, b) = cov(f[a], f[b]);
          block(a, a) += ridge;
        }
        chol[j] = Cholesky::factor(block);
      }
      cached_free[j] = f;
      have_factor[j] = true;
    }
  };

  // Preconditioned CG on H_FF p = -g_F, truncated on negative curvature.
  auto solve_reduced = [&](const std::vector<std::vector<std::size_t>>& free_rows,
                           const DenseMatrix& g) {
    NewtonSystem sys(lag, w, *cur, free_rows, chol);
    sys.set_logdet(cfg.acyclicity.type == AcyclicityKind::Type::LogDet);
    DenseMatrix r = g * -1.0;
    sys.mask(r);
    DenseMatrix p(d, d);
    DenseMatrix z = sys.precondition(r);
    DenseMatrix q = z;
    double rz = inner(r, z);
    const double r0 = frobenius_norm(r);
    const double cg_tol = std::min(0.5, std::sqrt(r0)) * r0;
    for (std::size_t k = 0; k < cg_cap && frobenius_norm(r) > cg_tol; ++k) {
      const DenseMatrix hq = sys.apply(q);
      const double curv = inner(q, hq);
      if (!(curv > 0.0)) {
        if (k == 0) p = q;
        break;
      }
      const double step = rz / curv;
      p += q * step;
      r -= hq * step;
      z = sys.precondition(r);
      const double rz_next = inner(r, z);
      q = z + q * (rz_next / rz);
      rz = rz_next;
    }
    return p;
  };

  auto stationarity = [&] {
    if (!pinned) return projected_gradient_residual(w, *cur->gradient);
    DenseMatrix g = *cur->gradient;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if ((*pinned)[i * d + j]) g(i, j) = 0.0;
    return projected_gradient_residual(w, g);
  };
  double residual = stationarity();
  std::size_t it = 0;
  for (; it < cfg.inner_max_iters; ++it) {
    residual = stationarity();
    if (residual <= cfg.inner_tol) break;
    const DenseMatrix& g = *cur->gradient;
    const double eps = std::min(kActiveEps, residual);

    DenseMatrix dir(d, d);
    std::vector<std::vector<std::size_t>> free_rows(d);
    std::vector<std::vector<bool>> held(d, std::vector<bool>(d, false));
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < d; ++i) {
        if (i == j || (pinned && (*pinned)[i * d + j])) continue;
        if (w(i, j) <= eps && g(i, j) > 0.0) {
          dir(i, j) = -g(i, j);
        } else {
          free_rows[j].push_back(i);
        }
      }
    }

    // A free coordinate sitting at the bound whose Newton component points
    // outward is held at zero and the reduced system is solved again.
    DenseMatrix p(d, d);
    for (std::size_t pass = 0; pass < kMaxHoldPasses; ++pass) {
      refresh_factors(free_rows);
      p = solve_reduced(free_rows, g);
      bool changed = false;
      for (std::size_t j = 0; j < d; ++j) {
        auto& f = free_rows[j];
        const auto kept = std::remove_if(f.begin(), f.end(), [&](std::size_t i) {
          const bool hold = w(i, j) <= eps && p(i, j) < 0.0;
          if (hold) held[j][i] = true;
          return hold;
        });
        if (kept != f.end()) {
          f.erase(kept, f.end());
          changed = true;
        }
      }
      if (!changed) break;
    }
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i : free_rows[j]) dir(i, j) = p(i, j);
      for (std::size_t i = 0; i < d; ++i)
        if (held[j][i]) dir(i, j) = 0.0;
    }

    const double slack = comparison_slack(cur->value);
    double step = 1.0;
    DenseMatrix cand = w;
    bool accepted = false;
    while (step >= kMinStep) {
      cand = w + dir * step;
      project_in_place(cand);
      const auto diff = lag.change(w, *cur, cand);
      if (diff && *diff <= kArmijo * inner(g, cand - w) + slack) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      throw LineSearchStall("projected Newton step underflow at inner iteration " +
                            std::to_string(it));
    }
    w = std::move(cand);
    cur = lag.evaluate(w, true);
    if (!cur) throw DomainError("accepted iterate left the domain");
  }
  if (it == cfg.inner_max_iters) residual = stationarity();
  return {WeightMatrix(std::move(w)), it, residual, cur->value, cur->h};
}

}  // namespace detail

/// Minimizes L_c(., state.lambda) with c = state.c, starting from state.w.
/// Every visited iterate is non-negative with zero diagonal and inside the
/// domain of h; the objective never increases beyond rounding. Stops when
/// ||W - P(W - grad L)||_F <= inner_tol or after inner_max_iters.
inline InnerResult inner_solve(SolverState& state, const DenseMatrix& cov, double alpha,
                               const SolverConfig& cfg) {
  detail::require_matching(state.w.matrix(), cov);
  const AugmentedLagrangian lag(cov, alpha, cfg.acyclicity, state.lambda, state.c);
  switch (cfg.inner_method()) {
    case InnerMethod::ProjectedNewton:
      return detail::run_projected_newton(lag, state.w.matrix(), cfg);
    case InnerMethod::Fista:
      return detail::run_projected_gradient(lag, state.w.matrix(), state.eta, cfg, true);
    case InnerMethod::ProjectedGradient:
      break;
  }
  return detail::run_projected_gradient(lag, state.w.matrix(), state.eta, cfg, false);
}

/// Thresholds w_raw and removes residual cycles.
inline WeightMatrix extract_dag(const WeightMatrix& w_raw, double tau) {
  return break_cycles(threshold_support(w_raw, tau));
}

/// Method of multipliers on a covariance. `init` must lie in the domain of
/// the acyclicity function; the zero matrix is used when absent.
inline SolveResult solve(const Covariance& cov, const SolverConfig& cfg,
                         std::optional<WeightMatrix> init = std::nullopt) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t d = cov.d();
  if (!cov.sigma.is_square()) throw DimensionError("covariance must be square");
  if (init && init->dim() != d) throw DimensionError("initial matrix dimension mismatch");

  DenseMatrix sigma = cov.sigma;
  if (cfg.known_sigma2) sigma *= 1.0 / *cfg.known_sigma2;
  const double alpha = cfg.alpha.value_or(0.0);

  SolverState state(init ? *init : WeightMatrix(d), cfg.lambda0, cfg.c0, cfg.eta0);
  const auto h0 = evaluate_acyclicity(cfg.acyclicity, state.w.matrix(), false);
  if (!h0.in_domain) throw DomainError("initial matrix outside the acyclicity domain");
  double h_prev = h0.value;

  // Stationarity is demanded at least to the scale of the current
  // infeasibility, otherwise small multiplier updates leave the iterate
  // unchanged once h is below inner_tol.
  SolverConfig stage = cfg;
  bool converged = d == 1;
  std::size_t k = 0;
  while (!converged && k < cfg.outer_max_iters) {
    if (k > 0) {
      stage.inner_tol = std::max(kMinInnerTol, std::min(cfg.inner_tol, kInnerTolPerH * h_prev));
    }
    InnerResult inner = inner_solve(state, sigma, alpha, stage);
    const double h = inner.h;
    state.w = std::move(inner.w);
    state.inner_iters_used.push_back(inner.iterations);
    state.objective_history.push_back(inner.value);
    state.h_history.push_back(h);

    state.lambda += state.c * h;
    if (h > cfg.gamma * h_prev) state.c *= cfg.beta;
    state.lambda_history.push_back(state.lambda);
    state.c_history.push_back(state.c);
    h_prev = h;
    ++k;
    converged = h <= cfg.h_tol;
  }

  WeightMatrix w_dag = extract_dag(state.w, cfg.threshold_tau);
  if (cfg.refit_support && converged && d > 1) {
    // On an acyclic support h vanishes identically, so the pinned problem is
    // the convex score restricted to that support.
    std::vector<bool> pinned(d * d, false);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) pinned[i * d + j] = w_dag(i, j) == 0.0;
    const AugmentedLagrangian lag(sigma, alpha, cfg.acyclicity, state.lambda, state.c);
    SolverConfig polish = cfg;
    polish.inner_tol = kMinInnerTol;
    InnerResult refit = detail::run_projected_newton(lag, w_dag.matrix(), polish, &pinned);
    state.w = std::move(refit.w);
    w_dag = extract_dag(state.w, cfg.threshold_tau);
  }
  const auto h_final = evaluate_acyclicity(cfg.acyclicity, state.w.matrix(), false);
  SolveResult res{state.w, std::move(w_dag), converged, h_final.value, k, 0.0, alpha,
                  std::move(state)};
  res.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

/// Solves from data: sample covariance, optional pre-whitening by the known
/// noise variance, and the default alpha when none is configured.
inline SolveResult solve(const Dataset& ds, SolverConfig cfg,
                         std::optional<WeightMatrix> init = std::nullopt) {
  if (!cfg.alpha) cfg.alpha = default_alpha(ds.d(), ds.n());
  return solve(sample_covariance(ds), cfg, std::move(init));
}

}  // namespace nomad

#endif  // NOMAD_SOLVER_HPP
