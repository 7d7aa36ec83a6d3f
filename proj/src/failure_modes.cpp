#include "fifa/failure_modes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fifa/error.hpp"

namespace fifa {

std::string_view to_string(Provenance p) { return p == Provenance::automatic ? "automatic" : "manual"; }

Provenance parse_provenance(std::string_view text) {
  if (text == "automatic") return Provenance::automatic;
  if (text == "manual") return Provenance::manual;
  throw ConfigError("unknown provenance '" + std::string(text) + "'");
}

FailureMode summarize_nodes(const MapperGraph& g, std::span<const std::size_t> node_ids, const Dataset& d,
                            const ExtractionThresholds& t) {
  FailureMode mode;
  mode.node_ids.assign(node_ids.begin(), node_ids.end());
  std::sort(mode.node_ids.begin(), mode.node_ids.end());
  mode.node_ids.erase(std::unique(mode.node_ids.begin(), mode.node_ids.end()), mode.node_ids.end());
  for (std::size_t v : mode.node_ids) {
    const auto& m = g.nodes.at(v).members;
    mode.members.insert(mode.members.end(), m.begin(), m.end());
  }
  std::sort(mode.members.begin(), mode.members.end());
  mode.members.erase(std::unique(mode.members.begin(), mode.members.end()), mode.members.end());
  if (mode.members.empty()) return mode;

  const auto& meta = d.meta();
  std::size_t correct = 0;
  double gt_sum = 0.0;
  for (std::size_t r : mode.members) {
    correct += d.is_correct(r, t.regression_tolerance) ? 1 : 0;
    gt_sum += meta.ground_truth[r];
    mode.error_mean += meta.error_measure[r];
    mode.residual_mean += d.residual(r);
    if (d.task() == TaskKind::classification) {
      mode.ground_truth_counts[static_cast<long long>(meta.ground_truth[r])]++;
      mode.prediction_counts[static_cast<long long>(meta.prediction[r])]++;
    }
  }
  const double n = static_cast<double>(mode.members.size());
  mode.accuracy = static_cast<double>(correct) / n;
  mode.error_mean /= n;
  mode.residual_mean /= n;
  if (d.task() == TaskKind::classification) {
    // Map iteration is ascending, so the first strict maximum is the lowest label.
    std::size_t best = 0;
    for (const auto& [label, count] : mode.ground_truth_counts) {
      if (count > best) {
        best = count;
        mode.ground_truth_mode = static_cast<double>(label);
      }
    }
  } else {
    mode.ground_truth_mode = gt_sum / n;
  }
  return mode;
}

std::vector<std::string> threshold_warnings(const FailureMode& mode, const ExtractionThresholds& t) {
  std::vector<std::string> out;
  if (mode.size() < t.min_size) {
    out.push_back("size " + std::to_string(mode.size()) + " < " + std::to_string(t.min_size));
  }
  if (!(mode.accuracy < t.baseline_accuracy)) {
    std::ostringstream s;
    s << "accuracy " << mode.accuracy << " >= baseline " << t.baseline_accuracy;
    out.push_back(s.str());
  }
  return out;
}

std::vector<FailureMode> select_failure_modes(const Partition& partition, const MapperGraph& g, const Dataset& d,
                                              const ExtractionThresholds& t) {
  if (partition.size() != g.nodes.size()) throw ArgumentError("partition does not match graph");
  if (!(t.baseline_accuracy >= 0.0 && t.baseline_accuracy <= 1.0)) {
    throw ConfigError("baseline_accuracy must lie in [0, 1]");
  }
  const Partition labels = normalize_partition(partition);
  std::vector<std::vector<std::size_t>> parts(part_count(labels));
  for (std::size_t v = 0; v < labels.size(); ++v) parts[labels[v]].push_back(v);

  std::vector<FailureMode> modes;
  for (const auto& nodes : parts) {
    FailureMode mode = summarize_nodes(g, nodes, d, t);
    if (mode.size() >= t.min_size && mode.accuracy < t.baseline_accuracy) {
      mode.id = modes.size();
      mode.provenance = Provenance::automatic;
      modes.push_back(std::move(mode));
    }
  }
  return modes;
}

FailureMode manual_select(const MapperGraph& g, std::span<const std::size_t> node_ids, const Dataset& d,
                          const ExtractionThresholds& t) {
  if (node_ids.empty()) throw SelectionError("empty selection");
  for (std::size_t v : node_ids) {
    if (v >= g.nodes.size()) throw SelectionError("unknown node id " + std::to_string(v));
  }
  FailureMode mode = summarize_nodes(g, node_ids, d, t);
  mode.provenance = Provenance::manual;
  mode.warnings = threshold_warnings(mode, t);
  return mode;
}

std::vector<FailureMode> extract_failure_modes(const MapperGraph& g, const Dataset& d, const FilterValues& supervision,
                                               const ExtractionThresholds& t) {
  if (g.nodes.empty()) return {};
  const WeightedGraph wg = weight_edges(g, supervision);
  return select_failure_modes(louvain(wg), g, d, t);
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("ks_statistic needs two nonempty samples");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return kernels::ks_sorted(sa, sb);
}

KSReport rank_features(std::span<const std::size_t> group, std::span<const std::size_t> reference, const Dataset& d,
                       std::size_t top_n, Execution exec) {
  if (group.empty() || reference.empty()) throw ArgumentError("rank_features needs two nonempty groups");
  if (top_n < 1) throw ArgumentError("top_n must be >= 1");
  const auto stats = kernels::ks_columns(d.features(), group, reference, exec);
  std::vector<std::size_t> order(stats.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return stats[l] > stats[r]; });
  KSReport report;
  const std::size_t keep = std::min(top_n, order.size());
  for (std::size_t i = 0; i < keep; ++i) {
    report.features.push_back({order[i], d.feature_names()[order[i]], stats[order[i]]});
  }
  return report;
}

}  // namespace fifa
