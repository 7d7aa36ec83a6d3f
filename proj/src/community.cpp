#include "fifa/community.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fifa/error.hpp"
#include "fifa/union_find.hpp"

namespace fifa {

namespace {

constexpr double kGainEpsilon = 1e-12;

}  // namespace

Partition normalize_partition(const Partition& p) {
  std::map<std::size_t, std::size_t> relabel;
  Partition out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto [it, inserted] = relabel.try_emplace(p[i], relabel.size());
    out[i] = it->second;
  }
  return out;
}

std::size_t part_count(const Partition& p) {
  std::size_t k = 0;
  for (std::size_t l : normalize_partition(p)) k = std::max(k, l + 1);
  return k;
}

WeightedGraph weight_edges(const MapperGraph& g, const FilterValues& supervision) {
  WeightedGraph wg;
  wg.node_count = g.nodes.size();
  wg.node_means.resize(g.nodes.size(), 0.0);
  for (std::size_t v = 0; v < g.nodes.size(); ++v) {
    const auto& members = g.nodes[v].members;
    if (members.empty()) continue;
    double sum = 0.0;
    for (std::size_t r : members) {
      if (r >= supervision.values.size()) {
        throw ArgumentError("supervision values do not cover row " + std::to_string(r));
      }
      sum += supervision.values[r];
    }
    wg.node_means[v] = sum / static_cast<double>(members.size());
  }
  double max_gap = 0.0;
  for (const auto& e : g.edges) {
    max_gap = std::max(max_gap, std::abs(wg.node_means[e.source] - wg.node_means[e.target]));
  }
  for (const auto& e : g.edges) {
    const double gap = std::abs(wg.node_means[e.source] - wg.node_means[e.target]);
    const double w = max_gap > 0.0 ? 1.0 - gap / max_gap : 1.0;
    wg.edges.push_back({e.source, e.target, std::clamp(w, 0.0, 1.0)});
  }
  return wg;
}

double modularity(const WeightedGraph& g, const Partition& p) {
  if (p.size() != g.node_count) throw ArgumentError("partition size does not match node count");
  double m = 0.0;
  std::vector<double> degree(g.node_count, 0.0);
  for (const auto& e : g.edges) {
    m += e.weight;
    degree[e.u] += e.weight;
    degree[e.v] += e.weight;
  }
  if (m <= 0.0) return 0.0;
  const Partition labels = normalize_partition(p);
  const std::size_t k = part_count(labels);
  std::vector<double> internal(k, 0.0);
  std::vector<double> total(k, 0.0);
  for (const auto& e : g.edges) {
    if (labels[e.u] == labels[e.v]) internal[labels[e.u]] += e.weight;
  }
  for (std::size_t v = 0; v < g.node_count; ++v) total[labels[v]] += degree[v];
  double q = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double share = total[c] / (2.0 * m);
    q += internal[c] / m - share * share;
  }
  return q;
}

Partition ahcl_partition(const WeightedGraph& g) {
  if (g.node_count == 0) throw ArgumentError("ahcl_partition needs a nonempty graph");
  std::vector<WeightedEdge> order = g.edges;
  // Merge height is 1 - w; stable order keeps equal heights in edge order.
  std::stable_sort(order.begin(), order.end(),
                   [](const WeightedEdge& a, const WeightedEdge& b) { return a.weight > b.weight; });

  UnionFind uf(g.node_count);
  Partition best = uf.labels();
  double best_q = modularity(g, best);
  std::size_t best_parts = g.node_count;

  for (std::size_t i = 0; i < order.size();) {
    const double height = 1.0 - order[i].weight;
    bool merged = false;
    std::size_t j = i;
    while (j < order.size() && 1.0 - order[j].weight == height) {
      merged = uf.unite(order[j].u, order[j].v) || merged;
      ++j;
    }
    i = j;
    if (!merged) continue;
    const Partition level = uf.labels();
    const double q = modularity(g, level);
    const std::size_t parts = uf.set_count();
    if (q > best_q + kGainEpsilon || (std::abs(q - best_q) <= kGainEpsilon && parts < best_parts)) {
      best = level;
      best_q = q;
      best_parts = parts;
    }
  }
  return best;
}

namespace {

/// Graph at one Louvain level: weighted adjacency plus self-loop weight.
struct LevelGraph {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj;
  std::vector<double> self_loop;
  std::vector<double> degree;
};

LevelGraph level_from(const WeightedGraph& g) {
  LevelGraph lg;
  lg.adj.resize(g.node_count);
  lg.self_loop.assign(g.node_count, 0.0);
  lg.degree.assign(g.node_count, 0.0);
  for (const auto& e : g.edges) {
    if (e.u == e.v) {
      lg.self_loop[e.u] += e.weight;
      lg.degree[e.u] += 2.0 * e.weight;
      continue;
    }
    lg.adj[e.u].emplace_back(e.v, e.weight);
    lg.adj[e.v].emplace_back(e.u, e.weight);
    lg.degree[e.u] += e.weight;
    lg.degree[e.v] += e.weight;
  }
  return lg;
}

LevelGraph aggregate(const LevelGraph& lg, const Partition& labels, std::size_t parts) {
  LevelGraph out;
  out.adj.resize(parts);
  out.self_loop.assign(parts, 0.0);
  out.degree.assign(parts, 0.0);
  std::vector<std::map<std::size_t, double>> links(parts);
  for (std::size_t i = 0; i < lg.adj.size(); ++i) {
    const std::size_t ci = labels[i];
    out.self_loop[ci] += lg.self_loop[i];
    out.degree[ci] += lg.degree[i];
    for (const auto& [j, w] : lg.adj[i]) {
      if (j < i) continue;
      const std::size_t cj = labels[j];
      if (ci == cj) {
        out.self_loop[ci] += w;
      } else {
        links[ci][cj] += w;
        links[cj][ci] += w;
      }
    }
  }
  for (std::size_t c = 0; c < parts; ++c) {
    for (const auto& [d, w] : links[c]) out.adj[c].emplace_back(d, w);
  }
  return out;
}

/// Repeated ascending-order sweeps of single-node moves. Returns whether any
/// node changed community.
bool local_moves(const LevelGraph& lg, double m, Partition& community) {
  const std::size_t n = lg.adj.size();
  std::vector<double> total(n, 0.0);
  std::vector<std::size_t> size(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    total[community[i]] += lg.degree[i];
    ++size[community[i]];
  }

  bool any = false;
  std::map<std::size_t, double> link;
  while (true) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t current = community[i];
      const double k = lg.degree[i];
      link.clear();
      link[current] = 0.0;
      for (const auto& [j, w] : lg.adj[i]) link[community[j]] += w;
      total[current] -= k;
      --size[current];

      std::size_t best = current;
      double best_gain = link[current] / m - total[current] * k / (2.0 * m * m);
      for (const auto& [c, w] : link) {
        const double gain = w / m - total[c] * k / (2.0 * m * m);
        if (gain > best_gain + kGainEpsilon) {
          best = c;
          best_gain = gain;
        }
      }
      // Isolation: an initial partition with fewer parts than nodes would
      // otherwise never let a node leave into a community of its own.
      if (size[current] > 0 && best_gain < -kGainEpsilon) {
        const auto empty = std::find(size.begin(), size.end(), std::size_t{0});
        if (empty != size.end()) {
          best = static_cast<std::size_t>(empty - size.begin());
          best_gain = 0.0;
        }
      }
      total[best] += k;
      ++size[best];
      if (best != current) {
        community[i] = best;
        moved = true;
        any = true;
      }
    }
    if (!moved) break;
  }
  return any;
}

}  // namespace

Partition louvain(const WeightedGraph& g, const Partition& initial) {
  if (g.node_count == 0) throw ArgumentError("louvain needs a nonempty graph");
  if (initial.size() != g.node_count) throw ArgumentError("initial partition size does not match node count");
  double m = 0.0;
  for (const auto& e : g.edges) m += e.weight;
  Partition community = normalize_partition(initial);
  if (m <= 0.0) return community;

  // assignment maps each original node to its node at the current level.
  Partition assignment(g.node_count);
  for (std::size_t i = 0; i < assignment.size(); ++i) assignment[i] = i;
  LevelGraph lg = level_from(g);
  while (true) {
    local_moves(lg, m, community);
    community = normalize_partition(community);
    const std::size_t parts = part_count(community);
    for (auto& a : assignment) a = community[a];
    if (parts == lg.adj.size() || parts == 1) break;
    lg = aggregate(lg, community, parts);
    community.resize(parts);
    for (std::size_t c = 0; c < parts; ++c) community[c] = c;
  }
  return normalize_partition(assignment);
}

Partition louvain(const WeightedGraph& g) {
  // AHCL often keeps a single part, from which local moves cannot escape;
  // a second pass from singletons is kept only when strictly better.
  Partition from_tree = louvain(g, ahcl_partition(g));
  Partition singles(g.node_count);
  std::iota(singles.begin(), singles.end(), std::size_t{0});
  Partition from_singles = louvain(g, singles);
  return modularity(g, from_singles) > modularity(g, from_tree) + kGainEpsilon ? from_singles : from_tree;
}

}  // namespace fifa
