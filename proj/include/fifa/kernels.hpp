#pragma once

// Data-parallel inner loops. Every kernel exists twice: `serial` is the
// straightforward reference kept for tests and benchmarks, `parallel` is the
// OpenMP version used by default. Both produce bit-identical results.

#include <cstddef>
#include <span>
#include <vector>

#include "fifa/matrix.hpp"

namespace fifa {

enum class Execution { serial, parallel };

struct MstEdge {
  std::size_t u;
  std::size_t v;
  double weight;
};

namespace kernels {

/// Two-sample Kolmogorov-Smirnov statistic of already sorted samples.
double ks_sorted(std::span<const double> a, std::span<const double> b);

/// Euclidean distance between two rows.
double row_distance(std::span<const double> a, std::span<const double> b);

namespace serial {

/// Population covariance (1/n) of the columns of x.
Matrix covariance(const Matrix& x);

/// Minimum spanning tree of the complete Euclidean graph on the rows of
/// `points` via Kruskal over all sorted pairs. O(c^2) memory.
std::vector<MstEdge> minimum_spanning_tree(const Matrix& points);

/// KS statistic per column of x between row groups a and b.
std::vector<double> ks_columns(const Matrix& x, std::span<const std::size_t> a, std::span<const std::size_t> b);

}  // namespace serial

namespace parallel {

Matrix covariance(const Matrix& x);

/// Prim's algorithm on the implicit complete graph. O(c) memory; the
/// distance update loop is split across threads for large point sets.
std::vector<MstEdge> minimum_spanning_tree(const Matrix& points);

std::vector<double> ks_columns(const Matrix& x, std::span<const std::size_t> a, std::span<const std::size_t> b);

}  // namespace parallel

inline Matrix covariance(const Matrix& x, Execution e) {
  return e == Execution::serial ? serial::covariance(x) : parallel::covariance(x);
}

inline std::vector<double> ks_columns(const Matrix& x, std::span<const std::size_t> a,
                                      std::span<const std::size_t> b, Execution e) {
  return e == Execution::serial ? serial::ks_columns(x, a, b) : parallel::ks_columns(x, a, b);
}

}  // namespace kernels
}  // namespace fifa
