#ifndef NOMAD_ACYCLICITY_HPP
#define NOMAD_ACYCLICITY_HPP

// Smooth acyclicity functions on non-negative matrices.
//
//   LogDet(s):  h(W) = d log s - log det(sI - W),  grad h = (sI - W)^{-T},
//               defined for rho(W) < s.
//   MatExp:     h(W) = tr(e^W) - d,                grad h = (e^W)^T.
//
// On the non-negative cone both vanish exactly on DAG supports and are
// strictly positive otherwise, since each is a non-negatively weighted sum
// of tr(W^k) over k >= 1.

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "nomad/errors.hpp"
#include "nomad/graphs.hpp"
#include "nomad/linalg.hpp"

namespace nomad {

struct AcyclicityKind {
  enum class Type { LogDet, MatExp };

  Type type = Type::LogDet;
  double s = 1.0;

  static AcyclicityKind log_det(double s = 1.0) {
    AcyclicityKind k{Type::LogDet, s};
    k.validate();
    return k;
  }
  static AcyclicityKind mat_exp() { return {Type::MatExp, 1.0}; }

  void validate() const {
    if (type == Type::LogDet && !(s > 0.0)) throw ConfigError("LogDet requires s > 0");
  }

  friend bool operator==(const AcyclicityKind&, const AcyclicityKind&) = default;
};

inline std::string to_string(const AcyclicityKind& k) {
  return k.type == AcyclicityKind::Type::LogDet ? "logdet" : "matexp";
}

/// Value and gradient of h. Out of domain, value is +infinity and the
/// gradient is absent.
struct AcyclicityEval {
  double value = std::numeric_limits<double>::infinity();
  std::optional<DenseMatrix> gradient;
  bool in_domain = false;
};

namespace detail {

inline void require_nonnegative(const DenseMatrix& w, const char* who) {
  if (!w.is_square()) throw DimensionError(std::string(who) + ": matrix not square");
  for (double v : w.entries()) {
    if (v < 0.0) throw NonNegativityError(std::string(who) + ": negative entry");
  }
}

}  // namespace detail

/// Log-determinant acyclicity on a general non-negative square matrix (the
/// diagonal may be nonzero). Domain membership uses the M-matrix test on
/// sI - W, which for W >= 0 is equivalent to rho(W) < s, and the same
/// factorization yields both value and gradient.
inline AcyclicityEval logdet_acyclicity(const DenseMatrix& w, double s,
                                        bool with_gradient = true) {
  detail::require_nonnegative(w, "logdet_acyclicity");
  if (!(s > 0.0)) throw ConfigError("LogDet requires s > 0");
  const std::size_t d = w.rows();
  DenseMatrix a = w;
  a *= -1.0;
  for (std::size_t i = 0; i < d; ++i) a(i, i) += s;
  const auto f = factor_m_matrix(a);
  if (!f) return {};
  const auto sld = f->signed_log_abs_det();
  if (!sld || sld->first <= 0) return {};

  AcyclicityEval out;
  out.in_domain = true;
  out.value = static_cast<double>(d) * std::log(s) - sld->second;
  if (with_gradient) {
    try {
      out.gradient = f->inverse_transpose();
    } catch (const OverflowError&) {
      return {};
    }
  }
  return out;
}

/// Matrix-exponential acyclicity on a general non-negative square matrix.
inline AcyclicityEval matexp_acyclicity(const DenseMatrix& w, bool with_gradient = true) {
  detail::require_nonnegative(w, "matexp_acyclicity");
  const DenseMatrix e = matrix_exponential(w);
  AcyclicityEval out;
  out.in_domain = true;
  out.value = trace(e) - static_cast<double>(w.rows());
  if (with_gradient) out.gradient = transpose(e);
  return out;
}

inline AcyclicityEval evaluate_acyclicity(const AcyclicityKind& kind, const DenseMatrix& w,
                                          bool with_gradient = true) {
  return kind.type == AcyclicityKind::Type::LogDet
             ? logdet_acyclicity(w, kind.s, with_gradient)
             : matexp_acyclicity(w, with_gradient);
}

inline AcyclicityEval eval_logdet(const WeightMatrix& w, double s) {
  return logdet_acyclicity(w.matrix(), s);
}

inline AcyclicityEval eval_matexp(const WeightMatrix& w) {
  return matexp_acyclicity(w.matrix());
}

/// LogDet: rho(w) < s by power iteration; MatExp: always true.
inline bool check_domain(const WeightMatrix& w, const AcyclicityKind& kind) {
  if (kind.type == AcyclicityKind::Type::MatExp) return true;
  return spectral_radius_nonneg(w.matrix()) < kind.s;
}

}  // namespace nomad

#endif  // NOMAD_ACYCLICITY_HPP
