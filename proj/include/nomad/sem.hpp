#ifndef NOMAD_SEM_HPP
#define NOMAD_SEM_HPP

// Linear structural equation model X = W^T X + Z: simulation and
// sample/population covariances.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nomad/errors.hpp"
#include "nomad/graphs.hpp"
#include "nomad/linalg.hpp"
#include "nomad/random.hpp"

namespace nomad {

struct SyntheticSource {
  DagSpec dag;
  std::uint64_t seed = 0;
};

struct FileSource {
  std::string path;
};

/// d x n observation matrix, one column per sample.
struct Dataset {
  DenseMatrix x;
  double noise_variance = 1.0;
  std::variant<SyntheticSource, FileSource> source = FileSource{};
  std::vector<std::string> names;

  std::size_t d() const noexcept { return x.rows(); }
  std::size_t n() const noexcept { return x.cols(); }
};

enum class CovarianceKind { Sample, Population };

struct Covariance {
  DenseMatrix sigma;
  CovarianceKind kind = CovarianceKind::Sample;

  std::size_t d() const noexcept { return sigma.rows(); }
};

/// Draws one standard-normal noise value per call; swap in another sampler
/// for non-Gaussian exogenous noise.
using NoiseSampler = std::function<double(Rng&)>;

inline NoiseSampler gaussian_noise() {
  return [](Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); };
}

/// n samples from the SEM, solving (I - W0^T) X = Z along a topological order.
/// Noise entries are sqrt(sigma2) times draws of `noise`.
inline Dataset simulate(const WeightMatrix& w0, std::size_t n, double sigma2,
                        std::uint64_t seed, const NoiseSampler& noise = gaussian_noise()) {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (!(sigma2 > 0.0)) throw ConfigError("noise variance must be > 0");
  if (!is_acyclic(w0)) throw CycleError("cannot simulate from a cyclic graph");
  const std::size_t d = w0.dim();
  const std::vector<std::size_t> order = topological_order(w0.matrix());
  const double scale = std::sqrt(sigma2);

  Rng rng(seed);
  DenseMatrix x(d, n);
  // Noise is drawn sample-major so a given seed gives the same Z regardless
  // of the graph.
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t j = 0; j < d; ++j) x(j, s) = scale * noise(rng);

  for (std::size_t j : order) {
    for (std::size_t i = 0; i < d; ++i) {
      const double wij = w0(i, j);
      if (wij == 0.0) continue;
      for (std::size_t s = 0; s < n; ++s) x(j, s) += wij * x(i, s);
    }
  }
  if (!x.all_finite()) throw OverflowError("simulated data overflowed");
  Dataset ds{std::move(x), sigma2, SyntheticSource{DagSpec{}, seed}, {}};
  return ds;
}

/// n^{-1} X X^T without mean-centering.
inline Covariance sample_covariance(const Dataset& ds) {
  const std::size_t d = ds.d(), n = ds.n();
  DenseMatrix s(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto xi = ds.x.row(i);
    for (std::size_t j = i; j < d; ++j) {
      const auto xj = ds.x.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += xi[k] * xj[k];
      s(i, j) = s(j, i) = acc / static_cast<double>(n);
    }
  }
  return {std::move(s), CovarianceKind::Sample};
}

/// sigma2 (I - W0)^{-T} (I - W0)^{-1}.
inline Covariance population_covariance(const WeightMatrix& w0, double sigma2) {
  if (!(sigma2 > 0.0)) throw ConfigError("noise variance must be > 0");
  if (!is_acyclic(w0)) throw CycleError("population covariance needs an acyclic graph");
  const std::size_t d = w0.dim();
  const DenseMatrix m0 = DenseMatrix::identity(d) - w0.matrix();
  const DenseMatrix m0_inv_t = inverse_transpose(m0);
  DenseMatrix sigma = multiply(m0_inv_t, transpose(m0_inv_t));
  // Symmetrize exactly.
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      sigma(i, j) = sigma(j, i) = 0.5 * (sigma(i, j) + sigma(j, i));
  sigma *= sigma2;
  return {std::move(sigma), CovarianceKind::Population};
}

}  // namespace nomad

#endif  // NOMAD_SEM_HPP
