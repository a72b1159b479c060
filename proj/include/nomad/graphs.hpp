#ifndef NOMAD_GRAPHS_HPP
#define NOMAD_GRAPHS_HPP

// Non-negative weighted adjacency matrices, random DAG synthesis and
// combinatorial acyclicity checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nomad/errors.hpp"
#include "nomad/linalg.hpp"
#include "nomad/random.hpp"

namespace nomad {

/// d x d adjacency matrix with W(i, j) the weight of edge i -> j.
/// Entries are non-negative and the diagonal is zero.
class WeightMatrix {
 public:
  explicit WeightMatrix(std::size_t d) : w_(d, d) {}

  explicit WeightMatrix(DenseMatrix w) : w_(std::move(w)) {
    if (!w_.is_square()) throw DimensionError("weight matrix must be square");
    for (std::size_t i = 0; i < dim(); ++i) {
      for (std::size_t j = 0; j < dim(); ++j) check_entry(i, j, w_(i, j));
    }
  }

  WeightMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : WeightMatrix(DenseMatrix(rows)) {}

  std::size_t dim() const noexcept { return w_.rows(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return w_(i, j); }
  const DenseMatrix& matrix() const noexcept { return w_; }

  void set(std::size_t i, std::size_t j, double v) {
    check_entry(i, j, v);
    w_(i, j) = v;
  }

  std::size_t edge_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(w_.entries().begin(), w_.entries().end(),
                      [](double v) { return v != 0.0; }));
  }

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  static void check_entry(std::size_t i, std::size_t j, double v) {
    if (!std::isfinite(v)) throw InvariantError("non-finite edge weight");
    if (v < 0.0) {
      throw NonNegativityError("negative weight at (" + std::to_string(i) + ", " +
                               std::to_string(j) + ")");
    }
    if (i == j && v != 0.0) {
      throw InvariantError("self-loop at node " + std::to_string(i));
    }
  }

  DenseMatrix w_;
};

/// Projection onto the weight-matrix set: negative entries and the diagonal
/// are set to zero.
inline WeightMatrix project_to_weights(DenseMatrix m) {
  if (!m.is_square()) throw DimensionError("weight matrix must be square");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (i == j || m(i, j) < 0.0) m(i, j) = 0.0;
    }
  }
  return WeightMatrix(std::move(m));
}

enum class GraphFamily { ErdosRenyi, ScaleFree };

inline std::string to_string(GraphFamily f) {
  return f == GraphFamily::ErdosRenyi ? "ER" : "SF";
}

inline GraphFamily parse_graph_family(const std::string& s) {
  if (s == "ER" || s == "er" || s == "ErdosRenyi") return GraphFamily::ErdosRenyi;
  if (s == "SF" || s == "sf" || s == "ScaleFree") return GraphFamily::ScaleFree;
  throw ConfigError("unknown graph family '" + s + "'");
}

struct DagSpec {
  std::size_t d = 10;
  GraphFamily family = GraphFamily::ErdosRenyi;
  /// Expected total (in + out) degree per node.
  double avg_degree = 4.0;
  double weight_low = 0.5;
  double weight_high = 2.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (d < 1) throw ConfigError("d must be >= 1");
    if (!(avg_degree >= 0.0) || !(avg_degree < static_cast<double>(d))) {
      throw ConfigError("avg_degree must lie in [0, d)");
    }
    if (!(weight_low > 0.0)) throw ConfigError("weight_low must be > 0");
    if (!(weight_high >= weight_low)) throw ConfigError("weight_high must be >= weight_low");
  }
};

/// True iff the support digraph of m has no directed cycle (self-loops
/// count as cycles). Iterative three-colour depth-first search.
inline bool is_acyclic(const DenseMatrix& m) {
  if (!m.is_square()) throw DimensionError("is_acyclic: matrix not square");
  const std::size_t n = m.rows();
  enum Colour : unsigned char { White, Grey, Black };
  std::vector<Colour> colour(n, White);
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t root = 0; root < n; ++root) {
    if (colour[root] != White) continue;
    stack.emplace_back(root, 0);
    colour[root] = Grey;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      bool pushed = false;
      while (next < n) {
        const std::size_t w = next++;
        if (m(v, w) == 0.0) continue;
        if (colour[w] == Grey) return false;
        if (colour[w] == White) {
          colour[w] = Grey;
          stack.emplace_back(w, 0);
          pushed = true;
          break;
        }
      }
      if (!pushed) {
        colour[v] = Black;
        stack.pop_back();
      }
    }
  }
  return true;
}

inline bool is_acyclic(const WeightMatrix& w) { return is_acyclic(w.matrix()); }

/// Nodes of an acyclic support in topological order; CycleError otherwise.
inline std::vector<std::size_t> topological_order(const DenseMatrix& m) {
  const std::size_t n = m.rows();
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (m(i, j) != 0.0) ++indegree[j];
  std::vector<std::size_t> order, ready;
  for (std::size_t i = n; i-- > 0;)
    if (indegree[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    const std::size_t v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (std::size_t j = n; j-- > 0;) {
      if (m(v, j) != 0.0 && --indegree[j] == 0) ready.push_back(j);
    }
  }
  if (order.size() != n) throw CycleError("support contains a directed cycle");
  return order;
}

/// Node sequence of some directed cycle in the support, if one exists.
inline std::optional<std::vector<std::size_t>> find_cycle(const DenseMatrix& m) {
  const std::size_t n = m.rows();
  std::vector<int> colour(n, 0);
  std::vector<std::size_t> parent(n, n);
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t root = 0; root < n; ++root) {
    if (colour[root] != 0) continue;
    stack.emplace_back(root, 0);
    colour[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      bool pushed = false;
      while (next < n) {
        const std::size_t w = next++;
        if (m(v, w) == 0.0) continue;
        if (colour[w] == 1) {
          std::vector<std::size_t> cycle{w};
          for (std::size_t u = v; u != w; u = parent[u]) cycle.push_back(u);
          std::reverse(cycle.begin() + 1, cycle.end());
          return cycle;
        }
        if (colour[w] == 0) {
          colour[w] = 1;
          parent[w] = v;
          stack.emplace_back(w, 0);
          pushed = true;
          break;
        }
      }
      if (!pushed) {
        colour[v] = 2;
        stack.pop_back();
      }
    }
  }
  return std::nullopt;
}

/// Zeroes every entry with magnitude below tau.
inline WeightMatrix threshold_support(const WeightMatrix& w, double tau) {
  if (!(tau >= 0.0)) throw ConfigError("threshold must be >= 0");
  DenseMatrix out = w.matrix();
  for (double& v : out.entries())
    if (std::abs(v) < tau) v = 0.0;
  return WeightMatrix(std::move(out));
}

/// Repeatedly deletes the lightest edge of some directed cycle until the
/// support is acyclic.
inline WeightMatrix break_cycles(const WeightMatrix& w) {
  DenseMatrix m = w.matrix();
  while (auto cycle = find_cycle(m)) {
    const auto& c = *cycle;
    std::size_t best_from = c.back(), best_to = c.front();
    double best = m(best_from, best_to);
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
      if (m(c[k], c[k + 1]) < best) {
        best = m(c[k], c[k + 1]);
        best_from = c[k];
        best_to = c[k + 1];
      }
    }
    m(best_from, best_to) = 0.0;
  }
  return WeightMatrix(std::move(m));
}

/// Random DAG whose edges point from lower to higher position in a uniformly
/// random node ordering.
///
/// ErdosRenyi: every admissible pair is an edge with probability
/// avg_degree / (d - 1), so the expected edge count is d * avg_degree / 2.
/// ScaleFree: nodes arrive one at a time and draw avg_degree / 2 parents
/// among the earlier nodes with probability proportional to (out-degree + 1);
/// a fractional attachment count is resolved by a Bernoulli extra link.
inline WeightMatrix generate_dag(const DagSpec& spec) {
  spec.validate();
  const std::size_t d = spec.d;
  Rng rng(spec.seed);
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> weight(spec.weight_low, spec.weight_high);
  auto draw_weight = [&] {
    return spec.weight_high > spec.weight_low ? weight(rng) : spec.weight_low;
  };

  WeightMatrix w(d);
  if (d == 1 || spec.avg_degree == 0.0) return w;

  if (spec.family == GraphFamily::ErdosRenyi) {
    const double p = spec.avg_degree / static_cast<double>(d - 1);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a + 1; b < d; ++b) {
        if (unit(rng) < p) w.set(perm[a], perm[b], draw_weight());
      }
    }
    return w;
  }

  const double links = spec.avg_degree / 2.0;
  const auto whole = static_cast<std::size_t>(std::floor(links));
  const double frac = links - static_cast<double>(whole);
  std::vector<double> out_degree(d, 0.0);
  for (std::size_t t = 1; t < d; ++t) {
    std::size_t m = whole + (unit(rng) < frac ? 1 : 0);
    m = std::min(m, t);
    std::vector<bool> chosen(t, false);
    for (std::size_t k = 0; k < m; ++k) {
      double total = 0.0;
      for (std::size_t u = 0; u < t; ++u)
        if (!chosen[u]) total += out_degree[u] + 1.0;
      double r = unit(rng) * total;
      std::size_t pick = t;
      for (std::size_t u = 0; u < t; ++u) {
        if (chosen[u]) continue;
        pick = u;
        r -= out_degree[u] + 1.0;
        if (r < 0.0) break;
      }
      chosen[pick] = true;
      out_degree[pick] += 1.0;
      w.set(perm[pick], perm[t], draw_weight());
    }
  }
  return w;
}

}  // namespace nomad

#endif  // NOMAD_GRAPHS_HPP
