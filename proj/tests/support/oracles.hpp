#pragma once

// Brute-force references. Each one recomputes a result from its definition
// without calling the library routine it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "fifa/community.hpp"
#include "fifa/dataset.hpp"
#include "fifa/mapper.hpp"

namespace oracle {

/// sup_t |F_a(t) - F_b(t)| by counting, over every sample value t.
inline double ks_double_loop(const std::vector<double>& a, const std::vector<double>& b) {
  double best = 0.0;
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::vector<double> points(a);
  points.insert(points.end(), b.begin(), b.end());
  for (double t : points) {
    std::size_t ca = 0, cb = 0;
    for (double v : a) ca += v <= t ? 1 : 0;
    for (double v : b) cb += v <= t ? 1 : 0;
    best = std::max(best, std::abs(static_cast<double>(ca) / na - static_cast<double>(cb) / nb));
  }
  return best;
}

/// Q = 1/(2m) sum_ij [A_ij - k_i k_j / (2m)] delta(c_i, c_j) on a dense
/// adjacency matrix.
inline double modularity_dense(const fifa::WeightedGraph& g, const std::vector<std::size_t>& part) {
  const std::size_t n = g.node_count;
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (const auto& e : g.edges) {
    a[e.u][e.v] += e.weight;
    if (e.u != e.v) a[e.v][e.u] += e.weight;
  }
  std::vector<double> k(n, 0.0);
  double two_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i] += a[i][j];
    two_m += k[i];
  }
  if (two_m == 0.0) return 0.0;
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (part[i] == part[j]) q += a[i][j] - k[i] * k[j] / two_m;
    }
  }
  return q / two_m;
}

/// Maximum modularity over every set partition (restricted growth strings).
inline double best_modularity(const fifa::WeightedGraph& g) {
  const std::size_t n = g.node_count;
  std::vector<std::size_t> rgs(n, 0);
  double best = -1.0;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
    if (i == n) {
      best = std::max(best, modularity_dense(g, rgs));
      return;
    }
    for (std::size_t c = 0; c <= used && c < n; ++c) {
      rgs[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  if (n == 0) return 0.0;
  rgs[0] = 0;
  rec(1, 1);
  return best;
}

/// Central finite-difference gradient.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

struct RefNode {
  std::vector<std::size_t> address;
  std::vector<std::size_t> members;
  bool operator==(const RefNode&) const = default;
};

struct RefEdge {
  std::size_t source, target, shared;
  bool operator==(const RefEdge&) const = default;
};

struct RefGraph {
  std::vector<RefNode> nodes;
  std::vector<RefEdge> edges;
};

class Dsu {
 public:
  explicit Dsu(std::size_t n) : p_(n) { std::iota(p_.begin(), p_.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) { return p_[x] == x ? x : p_[x] = find(p_[x]); }
  bool join(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    p_[std::max(a, b)] = std::min(a, b);
    return true;
  }

 private:
  std::vector<std::size_t> p_;
};

/// Variance-normalized Euclidean distance over non-constant columns.
inline std::vector<std::vector<double>> vne_distances(const fifa::Dataset& d) {
  const std::size_t n = d.rows(), m = d.cols();
  std::vector<double> var(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += d.features()(r, c);
    mean /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) var[c] += (d.features()(r, c) - mean) * (d.features()(r, c) - mean);
    var[c] /= static_cast<double>(n);
  }
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        if (var[c] <= 0.0) continue;
        const double diff = d.features()(i, c) - d.features()(j, c);
        s += diff * diff / var[c];
      }
      dist[i][j] = std::sqrt(s);
    }
  }
  return dist;
}

/// Left edge of the first empty bin after the first occupied one; -1 when
/// every bin from there on is occupied.
inline double histogram_cut(const std::vector<double>& heights, std::size_t bins) {
  const double top = *std::max_element(heights.begin(), heights.end());
  if (top <= 0.0) return -1.0;
  std::vector<int> count(bins, 0);
  for (double h : heights) {
    std::size_t b = static_cast<std::size_t>(std::floor(h / (top / static_cast<double>(bins))));
    if (b >= bins) b = bins - 1;
    count[b]++;
  }
  bool seen = false;
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] > 0) seen = true;
    else if (seen) return static_cast<double>(b) * (top / static_cast<double>(bins));
  }
  return -1.0;
}

/// Direct interval membership, union-find single linkage on all pairs and
/// all-pairs node intersection.
inline RefGraph mapper(const fifa::Dataset& d, const std::vector<std::vector<double>>& filters,
                       const std::vector<std::pair<std::size_t, double>>& covers, std::size_t bins) {
  const std::size_t n = d.rows();
  const auto dist = vne_distances(d);

  std::vector<std::vector<std::pair<double, double>>> intervals;
  for (std::size_t i = 0; i < filters.size(); ++i) {
    const double a = *std::min_element(filters[i].begin(), filters[i].end());
    const double b = *std::max_element(filters[i].begin(), filters[i].end());
    const auto [count, p] = covers[i];
    std::vector<std::pair<double, double>> iv;
    if (a == b) {
      iv.push_back({a, a});
    } else {
      const double delta = (b - a) / static_cast<double>(count);
      for (std::size_t s = 1; s <= count; ++s) {
        iv.push_back({a + (static_cast<double>(s) - 1.0 - p / 2.0) * delta, a + (static_cast<double>(s) + p / 2.0) * delta});
      }
    }
    intervals.push_back(iv);
  }

  RefGraph g;
  std::vector<std::size_t> addr(filters.size(), 0);
  while (true) {
    std::vector<std::size_t> cell;
    for (std::size_t r = 0; r < n; ++r) {
      bool in = true;
      for (std::size_t i = 0; i < filters.size() && in; ++i) {
        const auto [lo, hi] = intervals[i][addr[i]];
        in = lo <= filters[i][r] && filters[i][r] <= hi;
      }
      if (in) cell.push_back(r);
    }
    if (!cell.empty()) {
      const std::size_t c = cell.size();
      std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
      for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = i + 1; j < c; ++j) pairs.emplace_back(dist[cell[i]][cell[j]], i, j);
      }
      std::sort(pairs.begin(), pairs.end());
      Dsu tree(c);
      std::vector<double> heights;
      for (const auto& [w, i, j] : pairs) {
        if (tree.join(i, j)) heights.push_back(w);
      }
      const double cut = heights.empty() ? -1.0 : histogram_cut(heights, bins);
      Dsu link(c);
      for (const auto& [w, i, j] : pairs) {
        if (cut < 0.0 || w < cut) link.join(i, j);
      }
      std::map<std::size_t, std::vector<std::size_t>> groups;
      for (std::size_t i = 0; i < c; ++i) groups[link.find(i)].push_back(cell[i]);
      std::vector<std::vector<std::size_t>> clusters;
      for (auto& [root, members] : groups) clusters.push_back(members);
      std::sort(clusters.begin(), clusters.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
      std::vector<std::size_t> one_based(addr);
      for (auto& v : one_based) ++v;
      for (auto& members : clusters) g.nodes.push_back({one_based, members});
    }
    std::size_t i = filters.size();
    while (i > 0 && ++addr[i - 1] == intervals[i - 1].size()) {
      addr[i - 1] = 0;
      --i;
    }
    if (i == 0) break;
  }

  for (std::size_t u = 0; u < g.nodes.size(); ++u) {
    for (std::size_t v = u + 1; v < g.nodes.size(); ++v) {
      std::vector<std::size_t> both;
      std::set_intersection(g.nodes[u].members.begin(), g.nodes[u].members.end(), g.nodes[v].members.begin(),
                            g.nodes[v].members.end(), std::back_inserter(both));
      if (!both.empty()) g.edges.push_back({u, v, both.size()});
    }
  }
  return g;
}

/// Builds the library graph and the reference graph for the same inputs and
/// compares node addresses, member sets and edges exactly.
inline bool mapper_matches(const fifa::Dataset& d, const std::vector<fifa::FilterValues>& filters,
                           const std::vector<fifa::CoverSpec>& covers, std::size_t bins, fifa::Execution exec,
                           std::string* why = nullptr) {
  fifa::MapperOptions options;
  options.bins = bins;
  options.exec = exec;
  const auto metric = fifa::make_metric(d, fifa::MetricKind::variance_normalized_euclidean);
  const auto got = fifa::build_mapper(d, metric, filters, covers, options);

  std::vector<std::vector<double>> values;
  std::vector<std::pair<std::size_t, double>> cv;
  for (std::size_t i = 0; i < filters.size(); ++i) {
    values.push_back(filters[i].values);
    cv.emplace_back(covers[i].intervals, covers[i].overlap);
  }
  const auto want = mapper(d, values, cv, bins);
  const auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (got.nodes.size() != want.nodes.size()) {
    return fail("node count " + std::to_string(got.nodes.size()) + " vs " + std::to_string(want.nodes.size()));
  }
  for (std::size_t v = 0; v < got.nodes.size(); ++v) {
    if (got.nodes[v].address != want.nodes[v].address) return fail("address of node " + std::to_string(v));
    if (got.nodes[v].members != want.nodes[v].members) return fail("members of node " + std::to_string(v));
  }
  if (got.edges.size() != want.edges.size()) {
    return fail("edge count " + std::to_string(got.edges.size()) + " vs " + std::to_string(want.edges.size()));
  }
  for (std::size_t e = 0; e < got.edges.size(); ++e) {
    const auto& a = got.edges[e];
    const auto& b = want.edges[e];
    if (a.source != b.source || a.target != b.target || a.shared_count != b.shared) {
      return fail("edge " + std::to_string(e));
    }
  }
  return true;
}

}  // namespace oracle
