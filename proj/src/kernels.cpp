#include "fifa/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fifa/union_find.hpp"

namespace fifa::kernels {

double ks_sorted(std::span<const double> a, std::span<const double> b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double best = 0.0;
  // Step both empirical CDFs past every copy of the next smallest value, then
  // compare; right-continuity means ties are consumed before evaluating.
  while (i < a.size() || j < b.size()) {
    double x;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      x = a[i];
    } else {
      x = b[j];
    }
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    const double gap = std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb);
    best = std::max(best, gap);
  }
  return best;
}

double row_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

namespace {

Matrix centered(const Matrix& x) {
  Matrix c = x;
  const double n = static_cast<double>(x.rows());
  for (std::size_t col = 0; col < x.cols(); ++col) {
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, col);
    mean /= n;
    for (std::size_t r = 0; r < x.rows(); ++r) c(r, col) -= mean;
  }
  return c;
}

double covariance_entry(const Matrix& c, std::size_t a, std::size_t b) {
  double sum = 0.0;
  for (std::size_t r = 0; r < c.rows(); ++r) sum += c(r, a) * c(r, b);
  return sum / static_cast<double>(c.rows());
}

std::vector<double> gather_sorted(const Matrix& x, std::size_t col, std::span<const std::size_t> rows) {
  std::vector<double> v;
  v.reserve(rows.size());
  for (std::size_t r : rows) v.push_back(x(r, col));
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

namespace serial {

Matrix covariance(const Matrix& x) {
  const Matrix c = centered(x);
  const std::size_t d = x.cols();
  Matrix cov(d, d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov(a, b) = cov(b, a) = covariance_entry(c, a, b);
    }
  }
  return cov;
}

std::vector<MstEdge> minimum_spanning_tree(const Matrix& points) {
  const std::size_t n = points.rows();
  std::vector<MstEdge> pairs;
  pairs.reserve(n * (n - (n > 0 ? 1 : 0)) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      pairs.push_back({i, j, row_distance(points.row(i), points.row(j))});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const MstEdge& l, const MstEdge& r) {
    if (l.weight != r.weight) return l.weight < r.weight;
    if (l.u != r.u) return l.u < r.u;
    return l.v < r.v;
  });
  UnionFind uf(n);
  std::vector<MstEdge> tree;
  tree.reserve(n > 0 ? n - 1 : 0);
  for (const auto& e : pairs) {
    if (uf.unite(e.u, e.v)) {
      tree.push_back(e);
      if (tree.size() + 1 == n) break;
    }
  }
  return tree;
}

std::vector<double> ks_columns(const Matrix& x, std::span<const std::size_t> a, std::span<const std::size_t> b) {
  std::vector<double> out(x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    out[c] = ks_sorted(gather_sorted(x, c, a), gather_sorted(x, c, b));
  }
  return out;
}

}  // namespace serial

namespace parallel {

Matrix covariance(const Matrix& x) {
  const Matrix c = centered(x);
  const auto d = static_cast<std::ptrdiff_t>(x.cols());
  Matrix cov(x.cols(), x.cols());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t a = 0; a < d; ++a) {
    for (std::ptrdiff_t b = a; b < d; ++b) {
      const double v = covariance_entry(c, static_cast<std::size_t>(a), static_cast<std::size_t>(b));
      cov(a, b) = v;
      cov(b, a) = v;
    }
  }
  return cov;
}

std::vector<MstEdge> minimum_spanning_tree(const Matrix& points) {
  constexpr std::ptrdiff_t kParallelThreshold = 4096;
  const std::size_t n = points.rows();
  std::vector<MstEdge> tree;
  if (n < 2) return tree;
  tree.reserve(n - 1);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(n, kInf);
  std::vector<std::size_t> parent(n, 0);
  std::vector<char> in_tree(n, 0);
  std::size_t current = 0;
  in_tree[0] = 1;
  const auto count = static_cast<std::ptrdiff_t>(n);

  for (std::size_t step = 1; step < n; ++step) {
    const auto cur_row = points.row(current);
#pragma omp parallel for schedule(static) if (count >= kParallelThreshold)
    for (std::ptrdiff_t j = 0; j < count; ++j) {
      if (in_tree[j]) continue;
      const double d = row_distance(cur_row, points.row(static_cast<std::size_t>(j)));
      if (d < best[j]) {
        best[j] = d;
        parent[j] = current;
      }
    }
    std::size_t next = n;
    double next_d = kInf;
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j] && (next == n || best[j] < next_d)) {
        next = j;
        next_d = best[j];
      }
    }
    in_tree[next] = 1;
    tree.push_back({std::min(parent[next], next), std::max(parent[next], next), next_d});
    current = next;
  }
  return tree;
}

std::vector<double> ks_columns(const Matrix& x, std::span<const std::size_t> a, std::span<const std::size_t> b) {
  std::vector<double> out(x.cols());
  const auto d = static_cast<std::ptrdiff_t>(x.cols());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t c = 0; c < d; ++c) {
    const auto col = static_cast<std::size_t>(c);
    out[col] = ks_sorted(gather_sorted(x, col, a), gather_sorted(x, col, b));
  }
  return out;
}

}  // namespace parallel
}  // namespace fifa::kernels
