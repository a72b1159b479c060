#ifndef NOMAD_LINALG_HPP
#define NOMAD_LINALG_HPP

// Dense real-matrix kernels: products, norms, triangular factorizations,
// log-determinant, inverse, spectral radius of non-negative matrices,
// matrix exponential and symmetric eigenvalues.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nomad/errors.hpp"

namespace nomad {

/// Row-major dense real matrix with value semantics.
class DenseMatrix {
 public:
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), entries_(rows * cols, fill) {
    check_shape();
    check_finite();
  }

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    check_shape();
    if (entries_.size() != rows_ * cols_) {
      throw DimensionError("entry count " + std::to_string(entries_.size()) +
                           " does not match " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
    check_finite();
  }

  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    check_shape();
    entries_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("ragged initializer list");
      entries_.insert(entries_.end(), r.begin(), r.end());
    }
    check_finite();
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix diagonal(std::span<const double> values) {
    DenseMatrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept {
    return entries_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return entries_[i * cols_ + j];
  }

  std::span<double> entries() noexcept { return entries_; }
  std::span<const double> entries() const noexcept { return entries_; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {entries_.data() + i * cols_, cols_};
  }

  bool all_finite() const noexcept {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  DenseMatrix& operator+=(const DenseMatrix& o) {
    require_same_shape(o, "+=");
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += o.entries_[k];
    return *this;
  }
  DenseMatrix& operator-=(const DenseMatrix& o) {
    require_same_shape(o, "-=");
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] -= o.entries_[k];
    return *this;
  }
  DenseMatrix& operator*=(double a) noexcept {
    for (double& v : entries_) v *= a;
    return *this;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

  void require_same_shape(const DenseMatrix& o, const char* op) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) {
      throw DimensionError(std::string(op) + ": " + std::to_string(rows_) + "x" +
                           std::to_string(cols_) + " vs " + std::to_string(o.rows_) +
                           "x" + std::to_string(o.cols_));
    }
  }

 private:
  void check_shape() const {
    if (rows_ == 0 || cols_ == 0) throw DimensionError("matrix must be at least 1x1");
  }
  void check_finite() const {
    if (!all_finite()) throw OverflowError("non-finite matrix entry on construction");
  }

  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> entries_;
};

inline DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
inline DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
inline DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }
inline DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }

inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("multiply: inner dimensions " + std::to_string(a.cols()) +
                         " and " + std::to_string(b.rows()));
  }
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

inline DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  return multiply(a, b);
}

inline DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

inline DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  a.require_same_shape(b, "hadamard");
  DenseMatrix c = a;
  auto ce = c.entries();
  auto be = b.entries();
  for (std::size_t k = 0; k < ce.size(); ++k) ce[k] *= be[k];
  return c;
}

/// Frobenius inner product <a, b> = tr(a^T b).
inline double inner(const DenseMatrix& a, const DenseMatrix& b) {
  a.require_same_shape(b, "inner");
  double s = 0.0;
  auto ae = a.entries();
  auto be = b.entries();
  for (std::size_t k = 0; k < ae.size(); ++k) s += ae[k] * be[k];
  return s;
}

inline double frobenius_norm(const DenseMatrix& m) { return std::sqrt(inner(m, m)); }

inline double max_abs(const DenseMatrix& m) {
  double r = 0.0;
  for (double v : m.entries()) r = std::max(r, std::abs(v));
  return r;
}

inline double trace(const DenseMatrix& m) {
  if (!m.is_square()) throw DimensionError("trace of non-square matrix");
  double t = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) t += m(i, i);
  return t;
}

/// Induced 1-norm (maximum absolute column sum).
inline double norm_one(const DenseMatrix& m) {
  double best = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += std::abs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

/// Packed LU factors with row permutation: P*A = L*U, L unit lower.
struct LuFactorization {
  DenseMatrix lu;
  std::vector<std::size_t> perm;
  int permutation_sign = 1;

  std::size_t size() const noexcept { return lu.rows(); }

  /// Sign of det(A) and log|det(A)|, or nullopt when a pivot is exactly zero.
  std::optional<std::pair<int, double>> signed_log_abs_det() const {
    int sign = permutation_sign;
    double log_abs = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const double p = lu(i, i);
      if (p == 0.0) return std::nullopt;
      if (p < 0.0) sign = -sign;
      log_abs += std::log(std::abs(p));
    }
    return std::make_pair(sign, log_abs);
  }

  /// Solves A x = b in place.
  void solve_in_place(std::span<double> b) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = b[perm[i]];
    for (std::size_t i = 0; i < n; ++i) {
      double s = y[i];
      for (std::size_t k = 0; k < i; ++k) s -= lu(i, k) * y[k];
      y[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = y[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= lu(ii, k) * y[k];
      y[ii] = s / lu(ii, ii);
    }
    std::copy(y.begin(), y.end(), b.begin());
  }

  /// (A^{-1})^T, assembled column by column from solves against e_j.
  DenseMatrix inverse_transpose() const {
    const std::size_t n = size();
    DenseMatrix out(n, n);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::fill(col.begin(), col.end(), 0.0);
      col[j] = 1.0;
      solve_in_place(col);
      // col is column j of A^{-1}, i.e. row j of A^{-T}.
      for (std::size_t i = 0; i < n; ++i) out(j, i) = col[i];
    }
    if (!out.all_finite()) throw OverflowError("inverse has non-finite entries");
    return out;
  }
};

/// Gaussian elimination with partial pivoting.
inline LuFactorization lu_factor(const DenseMatrix& m) {
  if (!m.is_square()) throw DimensionError("lu_factor: matrix not square");
  const std::size_t n = m.rows();
  LuFactorization f{m, std::vector<std::size_t>(n), 1};
  for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
  DenseMatrix& a = f.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        piv = i;
      }
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
      f.permutation_sign = -f.permutation_sign;
    }
    const double p = a(k, k);
    if (p == 0.0) continue;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = a(i, k) / p;
      a(i, k) = l;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
    }
  }
  return f;
}

/// Elimination without pivoting that succeeds only if every pivot is
/// strictly positive. For a Z-matrix (non-positive off-diagonal) this holds
/// exactly when the matrix is a nonsingular M-matrix; for sI - W with W >= 0
/// that is the condition rho(W) < s.
inline std::optional<LuFactorization> factor_m_matrix(const DenseMatrix& m) {
  if (!m.is_square()) throw DimensionError("factor_m_matrix: matrix not square");
  const std::size_t n = m.rows();
  LuFactorization f{m, std::vector<std::size_t>(n), 1};
  for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
  DenseMatrix& a = f.lu;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = a(k, k);
    if (!(p > 0.0) || !std::isfinite(p)) return std::nullopt;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = a(i, k) / p;
      a(i, k) = l;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
    }
  }
  return f;
}

namespace detail {

// Relative pivot size below which a matrix is treated as singular.
inline double singular_pivot_threshold(const DenseMatrix& m) {
  return static_cast<double>(m.rows()) * std::numeric_limits<double>::epsilon() *
         std::max(max_abs(m), std::numeric_limits<double>::min());
}

inline void require_nonsingular(const LuFactorization& f, const DenseMatrix& m) {
  const double tol = singular_pivot_threshold(m);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (std::abs(f.lu(i, i)) <= tol) {
      throw SingularityError("pivot " + std::to_string(i) + " is numerically zero");
    }
  }
}

}  // namespace detail

/// log det(m) for matrices with positive determinant.
inline double log_det(const DenseMatrix& m) {
  const LuFactorization f = lu_factor(m);
  detail::require_nonsingular(f, m);
  const auto sld = f.signed_log_abs_det();
  if (!sld || sld->first <= 0) throw SingularityError("determinant is not positive");
  return sld->second;
}

inline DenseMatrix inverse_transpose(const DenseMatrix& m) {
  const LuFactorization f = lu_factor(m);
  detail::require_nonsingular(f, m);
  return f.inverse_transpose();
}

inline DenseMatrix inverse(const DenseMatrix& m) { return transpose(inverse_transpose(m)); }

namespace detail {

// Strongly connected components of the support digraph (Tarjan, iterative).
inline std::vector<std::vector<std::size_t>> strong_components(const DenseMatrix& m) {
  const std::size_t n = m.rows();
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnset), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> components;
  std::size_t counter = 0;

  struct Frame {
    std::size_t node;
    std::size_t next;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& fr = call.back();
      const std::size_t v = fr.node;
      bool descended = false;
      while (fr.next < n) {
        const std::size_t w = fr.next++;
        if (m(v, w) == 0.0) continue;
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        components.push_back(std::move(comp));
      }
      call.pop_back();
      if (!call.empty()) {
        const std::size_t parent = call.back().node;
        low[parent] = std::min(low[parent], low[v]);
      }
    }
  }
  return components;
}

// Perron root of an irreducible non-negative block by shifted power
// iteration with Collatz-Wielandt bounds.
inline double irreducible_perron_root(const DenseMatrix& b, double rel_tol,
                                      std::size_t max_iters) {
  const std::size_t n = b.rows();
  if (n == 1) return b(0, 0);
  double shift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += b(i, j);
    shift = std::max(shift, s);
  }
  std::vector<double> x(n, 1.0), y(n);
  double lo = 0.0, hi = shift;
  for (std::size_t it = 0; it < max_iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = shift * x[i];
      for (std::size_t j = 0; j < n; ++j) s += b(i, j) * x[j];
      y[i] = s;
    }
    lo = std::numeric_limits<double>::infinity();
    hi = 0.0;
    double ymax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] / x[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      ymax = std::max(ymax, y[i]);
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ymax;
    const double rho_lo = std::max(lo - shift, 0.0);
    if (hi - lo <= rel_tol * rho_lo || hi - lo <= 1e-300) break;
  }
  return std::max(0.5 * (lo + hi) - shift, 0.0);
}

}  // namespace detail

/// Spectral radius of an entrywise non-negative square matrix.
///
/// The support digraph is split into strongly connected components; the
/// spectral radius is the largest Perron root over the irreducible diagonal
/// blocks, each found by power iteration on (block + t I) with t its largest
/// row sum so the iteration is primitive. Acyclic supports return exactly 0.
inline double spectral_radius_nonneg(const DenseMatrix& m, double rel_tol = 1e-12,
                                     std::size_t max_iters = 200000) {
  if (!m.is_square()) throw DimensionError("spectral_radius_nonneg: matrix not square");
  for (double v : m.entries()) {
    if (v < 0.0) throw NonNegativityError("spectral_radius_nonneg: negative entry");
  }
  double rho = 0.0;
  for (const auto& comp : detail::strong_components(m)) {
    const std::size_t k = comp.size();
    DenseMatrix block(k, k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) block(a, b) = m(comp[a], comp[b]);
    rho = std::max(rho, detail::irreducible_perron_root(block, rel_tol, max_iters));
  }
  return rho;
}

/// e^m by scaling and squaring around a Taylor core. Nilpotent inputs give a
/// terminating series.
inline DenseMatrix matrix_exponential(const DenseMatrix& m) {
  if (!m.is_square()) throw DimensionError("matrix_exponential: matrix not square");
  const std::size_t n = m.rows();
  const double norm = norm_one(m);
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    if (squarings > 1000) throw OverflowError("matrix_exponential: norm too large");
  }
  DenseMatrix a = m;
  a *= std::ldexp(1.0, -squarings);

  DenseMatrix sum = DenseMatrix::identity(n);
  DenseMatrix term = DenseMatrix::identity(n);
  for (int k = 1; k <= 40; ++k) {
    term = multiply(term, a);
    term *= 1.0 / k;
    const double tn = max_abs(term);
    if (tn == 0.0) break;
    sum += term;
    if (tn <= 1e-18 * max_abs(sum)) break;
  }
  for (int i = 0; i < squarings; ++i) {
    sum = multiply(sum, sum);
    if (!sum.all_finite()) throw OverflowError("matrix_exponential overflowed");
  }
  if (!sum.all_finite()) throw OverflowError("matrix_exponential overflowed");
  return sum;
}

/// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
inline std::vector<double> symmetric_eigenvalues(const DenseMatrix& m) {
  if (!m.is_square()) throw DimensionError("symmetric_eigenvalues: matrix not square");
  const std::size_t n = m.rows();
  DenseMatrix a = m;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= 1e-30 * std::max(1.0, inner(a, a))) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// Singular values of a square matrix, descending.
inline std::vector<double> singular_values(const DenseMatrix& m) {
  std::vector<double> ev = symmetric_eigenvalues(multiply(transpose(m), m));
  std::vector<double> sv(ev.size());
  std::transform(ev.rbegin(), ev.rend(), sv.begin(),
                 [](double v) { return std::sqrt(std::max(v, 0.0)); });
  return sv;
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
class Cholesky {
 public:
  /// nullopt when a non-positive pivot appears.
  static std::optional<Cholesky> factor(const DenseMatrix& m) {
    if (!m.is_square()) throw DimensionError("cholesky: matrix not square");
    const std::size_t n = m.rows();
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      double d = m(j, j);
      for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
      if (!(d > 0.0)) return std::nullopt;
      l(j, j) = std::sqrt(d);
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = m(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        l(i, j) = s / l(j, j);
      }
    }
    return Cholesky(std::move(l));
  }

  std::size_t size() const noexcept { return l_.rows(); }

  void solve_in_place(std::span<double> b) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * b[k];
      b[i] = s / l_(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = b[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= l_(k, i) * b[k];
      b[i] = s / l_(i, i);
    }
  }

 private:
  explicit Cholesky(DenseMatrix l) : l_(std::move(l)) {}
  DenseMatrix l_;
};

/// True when a Cholesky factorization of the symmetric matrix succeeds.
inline bool is_positive_definite(const DenseMatrix& m) {
  return m.is_square() && Cholesky::factor(m).has_value();
}

}  // namespace nomad

#endif  // NOMAD_LINALG_HPP
