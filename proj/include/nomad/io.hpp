#ifndef NOMAD_IO_HPP
#define NOMAD_IO_HPP

// CSV input and output for matrices, datasets and edge lists.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nomad/errors.hpp"
#include "nomad/graphs.hpp"
#include "nomad/linalg.hpp"
#include "nomad/sem.hpp"

namespace nomad {

/// Raw CSV contents: an optional header row and numeric rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t cols() const noexcept {
    if (!header.empty()) return header.size();
    return rows.empty() ? 0 : rows.front().size();
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

}  // namespace detail

/// Reads a numeric CSV. A first row that does not parse as numbers is taken
/// as the header. Blank lines are skipped; ragged rows raise DataError.
inline CsvTable read_csv(const std::string& path) {
  auto in = detail::open_input(path);
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t k = 0; k < cells.size() && numeric; ++k)
      numeric = detail::parse_double(cells[k], row[k]);
    if (!numeric) {
      if (t.header.empty() && t.rows.empty()) {
        t.header = std::move(cells);
        continue;
      }
      throw DataError(path + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    if (t.cols() != 0 && row.size() != t.cols()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(t.cols()) + " columns, found " +
                      std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline DenseMatrix read_matrix_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  DenseMatrix m(t.rows.size(), t.cols());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m(i, j) = t.rows[i][j];
  return m;
}

inline void write_matrix_csv(const std::string& path, const DenseMatrix& m,
                             const std::vector<std::string>& names = {}) {
  auto out = detail::open_output(path);
  if (!names.empty()) {
    for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
    out << '\n';
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

/// Reads an n x d sample file (one row per sample) into a d x n Dataset.
inline Dataset read_dataset_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.rows.empty()) throw DataError("'" + path + "' has no samples");
  const std::size_t n = t.rows.size(), d = t.cols();
  DenseMatrix x(d, n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t j = 0; j < d; ++j) x(j, s) = t.rows[s][j];
  if (!x.all_finite()) throw DataError("'" + path + "' contains non-finite values");
  Dataset ds{std::move(x), 1.0, FileSource{path}, t.header};
  return ds;
}

inline void write_dataset_csv(const std::string& path, const Dataset& ds) {
  write_matrix_csv(path, transpose(ds.x), ds.names);
}

enum class Standardize { None, Center, ZScore };

inline std::string to_string(Standardize s) {
  switch (s) {
    case Standardize::None: return "none";
    case Standardize::Center: return "center";
    case Standardize::ZScore: return "zscore";
  }
  return "none";
}

inline Standardize parse_standardize(const std::string& s) {
  if (s == "none") return Standardize::None;
  if (s == "center") return Standardize::Center;
  if (s == "zscore") return Standardize::ZScore;
  throw ConfigError("unknown standardization '" + s + "' (none|center|zscore)");
}

/// Centers each variable and, for ZScore, scales it to unit (1/n) variance.
inline void standardize(Dataset& ds, Standardize mode) {
  if (mode == Standardize::None) return;
  const std::size_t n = ds.n();
  for (std::size_t j = 0; j < ds.d(); ++j) {
    double mean = 0.0;
    for (std::size_t s = 0; s < n; ++s) mean += ds.x(j, s);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      ds.x(j, s) -= mean;
      var += ds.x(j, s) * ds.x(j, s);
    }
    if (mode != Standardize::ZScore) continue;
    var /= static_cast<double>(n);
    if (!(var > 0.0)) throw DataError("variable " + std::to_string(j) + " is constant");
    const double inv = 1.0 / std::sqrt(var);
    for (std::size_t s = 0; s < n; ++s) ds.x(j, s) *= inv;
  }
}

/// Index of each edge-list endpoint in `names`; DataError for unknown labels.
inline std::size_t node_index(const std::vector<std::string>& names, const std::string& label) {
  const auto it = std::find(names.begin(), names.end(), label);
  if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
  double v = 0.0;
  if (detail::parse_double(label, v) && v >= 0.0 && v == std::floor(v) &&
      v < static_cast<double>(names.size())) {
    return static_cast<std::size_t>(v);
  }
  throw DataError("unknown node '" + label + "'");
}

/// Reads a `src,dst` edge list. Endpoints are column names or 0-based
/// indices; every edge gets weight 1.
inline WeightMatrix read_edge_list_csv(const std::string& path,
                                       const std::vector<std::string>& names) {
  auto in = detail::open_input(path);
  WeightMatrix w(names.size());
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() < 2) throw DataError("edge list rows need src,dst");
    if (first && cells[0] == "src" && cells[1] == "dst") {
      first = false;
      continue;
    }
    first = false;
    const std::size_t i = node_index(names, cells[0]);
    const std::size_t j = node_index(names, cells[1]);
    if (i == j) throw DataError("self-loop in edge list");
    w.set(i, j, 1.0);
  }
  return w;
}

inline void write_edge_list_csv(const std::string& path, const WeightMatrix& w,
                                const std::vector<std::string>& names = {}) {
  auto out = detail::open_output(path);
  out << "src,dst,weight\n";
  auto label = [&](std::size_t k) { return names.empty() ? std::to_string(k) : names[k]; };
  for (std::size_t i = 0; i < w.dim(); ++i)
    for (std::size_t j = 0; j < w.dim(); ++j)
      if (w(i, j) != 0.0) out << label(i) << ',' << label(j) << ',' << w(i, j) << '\n';
}

/// A reference DAG given either as a `src,dst` edge list or as a d x d
/// weight matrix.
inline WeightMatrix read_reference_dag(const std::string& path,
                                       const std::vector<std::string>& names) {
  std::string first_line;
  {
    auto in = detail::open_input(path);
    while (std::getline(in, first_line) && detail::trim(first_line).empty()) {
    }
  }
  const auto cells = detail::split_csv_line(first_line);
  const bool edge_list = cells.size() >= 2 && cells[0] == "src" && cells[1] == "dst";
  WeightMatrix w = edge_list ? read_edge_list_csv(path, names)
                             : WeightMatrix(read_matrix_csv(path));
  if (w.dim() != names.size()) throw DataError("reference DAG dimension mismatch");
  if (!is_acyclic(w)) throw CycleError("reference graph is cyclic");
  return w;
}

}  // namespace nomad

#endif  // NOMAD_IO_HPP
