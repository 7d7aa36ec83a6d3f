#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fifa/dataset.hpp"
#include "fifa/filters.hpp"
#include "fifa/kernels.hpp"

namespace fifa {

/// Resolution N_i and overlap proportion p of one filter's interval cover.
struct CoverSpec {
  std::size_t intervals = 10;
  double overlap = 0.3;
};

void validate_cover(const CoverSpec& spec);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t index = 1;  ///< 1-based position s in the cover

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

/// N closed intervals [a + (s-1-p/2)D, a + (s+p/2)D] with D = (b-a)/N.
/// A degenerate range (a == b) yields the single interval [a, a].
std::vector<Interval> build_cover(double a, double b, const CoverSpec& spec);

/// Position (s_1, ..., s_k) of a cell in the product cover, 1-based.
using Address = std::vector<std::size_t>;

struct Cell {
  Address address;
  std::vector<std::size_t> members;  ///< ascending row ids
};

/// Nonempty preimages of the product cover, in lexicographic address order.
std::vector<Cell> pullback_cells(std::span<const FilterValues> filters,
                                 std::span<const std::vector<Interval>> covers);

/// Cutoff from the histogram of single-linkage merge distances: `bins`
/// equal-width bins over [0, max]; the left edge of the first empty bin that
/// follows an occupied one. No such bin (or no distances) means no cutoff.
std::optional<double> histogram_cutoff(std::span<const double> merge_distances, std::size_t bins);

/// Cluster labels for points (rows) under single linkage with the histogram
/// cutoff. Labels are dense and numbered by first occurrence.
std::vector<std::size_t> single_linkage_labels(const Matrix& points, std::size_t bins,
                                               Execution exec = Execution::parallel);

/// Single-linkage clusters of `members` under metric m. Clusters hold
/// ascending row ids and are ordered by their smallest member.
std::vector<std::vector<std::size_t>> single_linkage(std::span<const std::size_t> members, const Dataset& d,
                                                     const MetricSpec& m, std::size_t bins,
                                                     Execution exec = Execution::parallel);

struct NodeStats {
  std::size_t size = 0;
  double error_mean = 0.0;
  double ground_truth_mean = 0.0;
  double prediction_mean = 0.0;
  double accuracy = 0.0;
  std::map<std::string, double> flag_means;
};

NodeStats node_stats(const Dataset& d, std::span<const std::size_t> members, double regression_tolerance);

struct MapperNode {
  std::size_t id = 0;
  Address address;
  std::size_t cluster = 0;  ///< j within the cell
  std::vector<std::size_t> members;
  NodeStats stats;
};

struct MapperEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  std::size_t shared_count = 0;

  bool operator==(const MapperEdge&) const = default;
};

struct MapperGraph {
  std::vector<MapperNode> nodes;
  std::vector<MapperEdge> edges;  ///< source < target, sorted
  std::size_t row_count = 0;
};

/// Edges between every pair of nodes whose member sets intersect.
std::vector<MapperEdge> nerve_edges(std::span<const MapperNode> nodes);
MapperGraph nerve(std::vector<MapperNode> nodes, std::size_t row_count);

struct MapperOptions {
  std::size_t bins = 10;
  std::size_t max_cell_size = 20'000;
  double regression_tolerance = 1.0;
  Execution exec = Execution::parallel;
};

MapperGraph build_mapper(const Dataset& d, const MetricSpec& m, std::span<const FilterValues> filters,
                         std::span<const CoverSpec> covers, const MapperOptions& options = {});

MapperGraph build_mapper(const Dataset& d, const MetricSpec& m, std::span<const FilterSpec> specs,
                         std::span<const CoverSpec> covers, const MapperOptions& options = {});

/// Number of connected components of the graph.
std::size_t connected_components(const MapperGraph& g);

}  // namespace fifa
