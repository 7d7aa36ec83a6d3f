#include "fifa/mapper.hpp"

#include <algorithm>
#include <cmath>

#include "fifa/error.hpp"
#include "fifa/parallel.hpp"
#include "fifa/union_find.hpp"

namespace fifa {

void validate_cover(const CoverSpec& spec) {
  if (spec.intervals < 1) throw ConfigError("cover needs at least one interval");
  if (!(spec.overlap > 0.0 && spec.overlap < 1.0)) {
    throw ConfigError("cover overlap must satisfy 0 < p < 1, got " + std::to_string(spec.overlap));
  }
}

std::vector<Interval> build_cover(double a, double b, const CoverSpec& spec) {
  validate_cover(spec);
  if (!(b >= a)) throw ConfigError("cover range must satisfy a <= b");
  if (a == b) return {Interval{a, a, 1}};
  const double n = static_cast<double>(spec.intervals);
  const double p = spec.overlap;
  const double delta = (b - a) / n;
  std::vector<Interval> out;
  out.reserve(spec.intervals);
  for (std::size_t s = 1; s <= spec.intervals; ++s) {
    const double sd = static_cast<double>(s);
    out.push_back({a + (sd - 1.0 - p / 2.0) * delta, a + (sd + p / 2.0) * delta, s});
  }
  return out;
}

std::vector<Cell> pullback_cells(std::span<const FilterValues> filters,
                                 std::span<const std::vector<Interval>> covers) {
  if (filters.size() != covers.size()) throw ConfigError("filters and covers must align");
  if (filters.empty()) throw ConfigError("Mapper needs at least one filter");
  const std::size_t n = filters.front().values.size();
  for (const auto& f : filters) {
    if (f.values.size() != n) throw ConfigError("all filters must cover the same rows");
  }

  std::map<Address, std::vector<std::size_t>> cells;
  const std::size_t k = filters.size();
  std::vector<std::vector<std::size_t>> hits(k);
  Address address(k);
  for (std::size_t row = 0; row < n; ++row) {
    bool covered = true;
    for (std::size_t i = 0; i < k; ++i) {
      hits[i].clear();
      for (const auto& iv : covers[i]) {
        if (iv.contains(filters[i].values[row])) hits[i].push_back(iv.index);
      }
      covered = covered && !hits[i].empty();
    }
    if (!covered) continue;
    // Odometer over the Cartesian product of matching intervals.
    std::vector<std::size_t> pos(k, 0);
    while (true) {
      for (std::size_t i = 0; i < k; ++i) address[i] = hits[i][pos[i]];
      cells[address].push_back(row);
      std::size_t i = k;
      while (i > 0 && ++pos[i - 1] == hits[i - 1].size()) {
        pos[i - 1] = 0;
        --i;
      }
      if (i == 0) break;
    }
  }

  std::vector<Cell> out;
  out.reserve(cells.size());
  for (auto& [addr, members] : cells) out.push_back({addr, std::move(members)});
  return out;
}

std::optional<double> histogram_cutoff(std::span<const double> merge_distances, std::size_t bins) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  if (merge_distances.empty()) return std::nullopt;
  const double max = *std::max_element(merge_distances.begin(), merge_distances.end());
  if (!(max > 0.0)) return std::nullopt;
  const double width = max / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double x : merge_distances) {
    auto b = static_cast<std::size_t>(std::floor(x / width));
    counts[std::min(b, bins - 1)]++;
  }
  std::size_t first = 0;
  while (counts[first] == 0) ++first;
  for (std::size_t b = first + 1; b < bins; ++b) {
    if (counts[b] == 0) return static_cast<double>(b) * width;
  }
  return std::nullopt;
}

std::vector<std::size_t> single_linkage_labels(const Matrix& points, std::size_t bins, Execution exec) {
  const std::size_t n = points.rows();
  if (n == 0) return {};
  const auto tree = exec == Execution::serial ? kernels::serial::minimum_spanning_tree(points)
                                              : kernels::parallel::minimum_spanning_tree(points);
  std::vector<double> heights;
  heights.reserve(tree.size());
  for (const auto& e : tree) heights.push_back(e.weight);
  std::sort(heights.begin(), heights.end());
  const auto cutoff = histogram_cutoff(heights, bins);

  UnionFind uf(n);
  for (const auto& e : tree) {
    if (!cutoff || e.weight < *cutoff) uf.unite(e.u, e.v);
  }
  return uf.labels();
}

namespace {

std::vector<std::vector<std::size_t>> group_by_label(std::span<const std::size_t> members,
                                                     const std::vector<std::size_t>& labels) {
  std::size_t k = 0;
  for (std::size_t l : labels) k = std::max(k, l + 1);
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < members.size(); ++i) out[labels[i]].push_back(members[i]);
  return out;
}

}  // namespace

std::vector<std::vector<std::size_t>> single_linkage(std::span<const std::size_t> members, const Dataset& d,
                                                     const MetricSpec& m, std::size_t bins, Execution exec) {
  if (members.empty()) throw ArgumentError("single_linkage needs a nonempty member set");
  std::vector<std::size_t> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const Matrix points = embed(d, m, sorted);
  return group_by_label(sorted, single_linkage_labels(points, bins, exec));
}

NodeStats node_stats(const Dataset& d, std::span<const std::size_t> members, double regression_tolerance) {
  NodeStats s;
  s.size = members.size();
  if (members.empty()) return s;
  const auto& meta = d.meta();
  std::size_t correct = 0;
  for (std::size_t r : members) {
    s.error_mean += meta.error_measure[r];
    s.ground_truth_mean += meta.ground_truth[r];
    s.prediction_mean += meta.prediction[r];
    correct += d.is_correct(r, regression_tolerance) ? 1 : 0;
  }
  const double n = static_cast<double>(members.size());
  s.error_mean /= n;
  s.ground_truth_mean /= n;
  s.prediction_mean /= n;
  s.accuracy = static_cast<double>(correct) / n;
  for (const auto& [name, values] : meta.flags) {
    double sum = 0.0;
    for (std::size_t r : members) sum += values[r];
    s.flag_means[name] = sum / n;
  }
  return s;
}

std::vector<MapperEdge> nerve_edges(std::span<const MapperNode> nodes) {
  std::size_t rows = 0;
  for (const auto& node : nodes) {
    for (std::size_t r : node.members) rows = std::max(rows, r + 1);
  }
  std::vector<std::vector<std::size_t>> owners(rows);
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    for (std::size_t r : nodes[v].members) owners[r].push_back(v);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& list : owners) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        pairs.emplace_back(std::min(list[i], list[j]), std::max(list[i], list[j]));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<MapperEdge> edges;
  for (std::size_t i = 0; i < pairs.size();) {
    std::size_t j = i;
    while (j < pairs.size() && pairs[j] == pairs[i]) ++j;
    edges.push_back({pairs[i].first, pairs[i].second, j - i});
    i = j;
  }
  return edges;
}

MapperGraph nerve(std::vector<MapperNode> nodes, std::size_t row_count) {
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i].id = i;
  MapperGraph g;
  g.edges = nerve_edges(nodes);
  g.nodes = std::move(nodes);
  g.row_count = row_count;
  return g;
}

MapperGraph build_mapper(const Dataset& d, const MetricSpec& m, std::span<const FilterValues> filters,
                         std::span<const CoverSpec> covers, const MapperOptions& options) {
  if (filters.empty()) throw ConfigError("Mapper needs at least one filter");
  if (filters.size() != covers.size()) {
    throw ConfigError("got " + std::to_string(filters.size()) + " filters but " + std::to_string(covers.size()) +
                      " cover specs");
  }
  if (options.bins < 1) throw ConfigError("histogram bins must be >= 1");
  validate_metric(d, m);

  std::vector<std::vector<Interval>> intervals;
  for (std::size_t i = 0; i < filters.size(); ++i) {
    if (filters[i].values.size() != d.rows()) throw ConfigError("filter '" + filters[i].name + "' has wrong length");
    intervals.push_back(build_cover(filters[i].lo, filters[i].hi, covers[i]));
  }
  const auto cells = pullback_cells(filters, intervals);
  for (const auto& c : cells) {
    if (c.members.size() > options.max_cell_size) {
      throw ConfigError("cover cell with " + std::to_string(c.members.size()) + " members exceeds the limit of " +
                        std::to_string(options.max_cell_size) + "; use more intervals or raise max_cell_size");
    }
  }

  std::vector<std::vector<std::vector<std::size_t>>> clusters(cells.size());
  parallel_for(cells.size(), options.exec, [&](std::size_t c) {
    clusters[c] = single_linkage(cells[c].members, d, m, options.bins, options.exec);
  });

  std::vector<MapperNode> nodes;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t j = 0; j < clusters[c].size(); ++j) {
      MapperNode node;
      node.id = nodes.size();
      node.address = cells[c].address;
      node.cluster = j;
      node.members = std::move(clusters[c][j]);
      node.stats = node_stats(d, node.members, options.regression_tolerance);
      nodes.push_back(std::move(node));
    }
  }
  return nerve(std::move(nodes), d.rows());
}

MapperGraph build_mapper(const Dataset& d, const MetricSpec& m, std::span<const FilterSpec> specs,
                         std::span<const CoverSpec> covers, const MapperOptions& options) {
  std::vector<FilterValues> filters;
  filters.reserve(specs.size());
  for (const auto& s : specs) filters.push_back(compute_filter(d, s, options.exec));
  return build_mapper(d, m, filters, covers, options);
}

std::size_t connected_components(const MapperGraph& g) {
  UnionFind uf(g.nodes.size());
  for (const auto& e : g.edges) uf.unite(e.source, e.target);
  return uf.set_count();
}

}  // namespace fifa
