#pragma once

#include <cstddef>
#include <vector>

#include "fifa/filters.hpp"
#include "fifa/mapper.hpp"

namespace fifa {

struct WeightedEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 0.0;
};

/// Mapper graph topology with supervision-derived edge weights in [0, 1].
struct WeightedGraph {
  std::size_t node_count = 0;
  std::vector<WeightedEdge> edges;
  /// Mean of the supervision function over each node's members.
  std::vector<double> node_means;
};

/// Community label per node. Labels are dense and numbered by first
/// occurrence in node order.
using Partition = std::vector<std::size_t>;

Partition normalize_partition(const Partition& p);
std::size_t part_count(const Partition& p);

/// w = 1 - |mu_u - mu_v| / M where M is the largest mean gap over all edges
/// (every weight is 1 when M = 0).
WeightedGraph weight_edges(const MapperGraph& g, const FilterValues& supervision);

/// Newman modularity on edge weights. Zero for a graph without weight.
double modularity(const WeightedGraph& g, const Partition& p);

/// Agglomerative single linkage on the node metric 1 - w (adjacent nodes
/// only). Every dendrogram level is scored by modularity and the best cut
/// is returned; ties go to fewer clusters, then to the lower level.
Partition ahcl_partition(const WeightedGraph& g);

/// Louvain modularity optimization starting from `initial`. Local moves
/// visit nodes in ascending id order.
Partition louvain(const WeightedGraph& g, const Partition& initial);

/// Louvain initialized from ahcl_partition(g). A second run from singletons
/// replaces it only if its modularity is strictly higher.
Partition louvain(const WeightedGraph& g);

}  // namespace fifa
