#ifndef NOMAD_METRICS_HPP
#define NOMAD_METRICS_HPP

// Estimation error and support-recovery metrics.

#include <algorithm>
#include <cstddef>
#include <string>

#include "nomad/errors.hpp"
#include "nomad/graphs.hpp"
#include "nomad/linalg.hpp"

namespace nomad {

struct MetricsReport {
  double nerr = 0.0;
  std::size_t shd = 0;
  /// shd / d.
  double shd_normalized = 0.0;
  double tpr = 0.0;
  double fdr = 0.0;
  double f1 = 0.0;
  double wall_time = 0.0;
};

/// Directed-edge confusion counts between an estimated and a true support.
struct EdgeCounts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
};

struct SupportConfusion {
  double tpr = 0.0;
  double fdr = 0.0;
  double f1 = 0.0;
  EdgeCounts counts;
};

namespace detail {

inline void require_same_dim(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.is_square() || a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("metric arguments must be square and of equal size");
  }
}

inline void require_dag(const DenseMatrix& w, const char* which) {
  if (!is_acyclic(w)) throw CycleError(std::string(which) + " support is cyclic");
}

}  // namespace detail

/// ||w_hat - w0||_F^2 / ||w0||_F^2.
inline double nerr(const DenseMatrix& w_hat, const DenseMatrix& w0) {
  detail::require_same_dim(w_hat, w0);
  const double denom = inner(w0, w0);
  if (denom == 0.0) throw DegenerateTruthError("nerr undefined for an all-zero truth");
  const DenseMatrix diff = w_hat - w0;
  return inner(diff, diff) / denom;
}

inline double nerr(const WeightMatrix& w_hat, const WeightMatrix& w0) {
  return nerr(w_hat.matrix(), w0.matrix());
}

/// Structural Hamming distance: every unordered pair whose edge state
/// (absent, i->j, j->i) differs costs one move.
inline std::size_t shd(const DenseMatrix& w_hat, const DenseMatrix& w0) {
  detail::require_same_dim(w_hat, w0);
  detail::require_dag(w_hat, "estimated");
  detail::require_dag(w0, "true");
  const std::size_t d = w0.rows();
  std::size_t count = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const bool a_ij = w_hat(i, j) != 0.0, a_ji = w_hat(j, i) != 0.0;
      const bool b_ij = w0(i, j) != 0.0, b_ji = w0(j, i) != 0.0;
      if (a_ij != b_ij || a_ji != b_ji) ++count;
    }
  }
  return count;
}

inline std::size_t shd(const WeightMatrix& w_hat, const WeightMatrix& w0) {
  return shd(w_hat.matrix(), w0.matrix());
}

inline EdgeCounts edge_counts(const DenseMatrix& w_hat, const DenseMatrix& w0) {
  detail::require_same_dim(w_hat, w0);
  EdgeCounts c;
  const std::size_t d = w0.rows();
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const bool predicted = w_hat(i, j) != 0.0;
      const bool truth = w0(i, j) != 0.0;
      if (predicted && truth) ++c.true_positive;
      if (predicted && !truth) ++c.false_positive;
      if (!predicted && truth) ++c.false_negative;
    }
  }
  return c;
}

/// tpr = TP / (TP + FN), fdr = FP / max(1, TP + FP), f1 = 2TP / (2TP + FP + FN).
/// A reversed edge is one false positive and one false negative. Ratios with
/// an empty denominator are 0.
inline SupportConfusion support_confusion(const DenseMatrix& w_hat, const DenseMatrix& w0) {
  detail::require_same_dim(w_hat, w0);
  detail::require_dag(w_hat, "estimated");
  detail::require_dag(w0, "true");
  SupportConfusion out;
  out.counts = edge_counts(w_hat, w0);
  const auto tp = static_cast<double>(out.counts.true_positive);
  const auto fp = static_cast<double>(out.counts.false_positive);
  const auto fn = static_cast<double>(out.counts.false_negative);
  out.tpr = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  out.fdr = fp / std::max(1.0, tp + fp);
  out.f1 = 2.0 * tp + fp + fn > 0.0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
  return out;
}

inline SupportConfusion support_confusion(const WeightMatrix& w_hat, const WeightMatrix& w0) {
  return support_confusion(w_hat.matrix(), w0.matrix());
}

/// All metrics of an estimate against the truth. nerr is left at 0 when the
/// truth has no edges.
inline MetricsReport evaluate(const WeightMatrix& w_raw, const WeightMatrix& w_dag,
                              const WeightMatrix& w0, double wall_time = 0.0) {
  MetricsReport r;
  r.nerr = w0.edge_count() > 0 ? nerr(w_raw, w0) : 0.0;
  r.shd = shd(w_dag, w0);
  r.shd_normalized = static_cast<double>(r.shd) / static_cast<double>(w0.dim());
  const auto conf = support_confusion(w_dag, w0);
  r.tpr = conf.tpr;
  r.fdr = conf.fdr;
  r.f1 = conf.f1;
  r.wall_time = wall_time;
  return r;
}

}  // namespace nomad

#endif  // NOMAD_METRICS_HPP
