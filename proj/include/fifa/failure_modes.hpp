#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fifa/community.hpp"
#include "fifa/dataset.hpp"
#include "fifa/kernels.hpp"
#include "fifa/mapper.hpp"

namespace fifa {

enum class Provenance { automatic, manual };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

/// Thresholds used to keep a partition part as a failure mode.
struct ExtractionThresholds {
  std::size_t min_size = 15;
  double baseline_accuracy = 0.9905;
  /// Regression only: |residual| at or below this counts as correct.
  double regression_tolerance = 1.0;
};

struct FailureMode {
  std::size_t id = 0;
  std::vector<std::size_t> node_ids;
  std::vector<std::size_t> members;  ///< deduplicated, ascending
  /// Majority ground-truth label (classification) or mean ground truth.
  double ground_truth_mode = 0.0;
  double accuracy = 0.0;
  double error_mean = 0.0;
  /// Mean of prediction - ground_truth over members.
  double residual_mean = 0.0;
  Provenance provenance = Provenance::automatic;
  /// Classification only.
  std::map<long long, std::size_t> ground_truth_counts;
  std::map<long long, std::size_t> prediction_counts;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return members.size(); }
};

/// Statistics of an arbitrary group of nodes.
FailureMode summarize_nodes(const MapperGraph& g, std::span<const std::size_t> node_ids, const Dataset& d,
                            const ExtractionThresholds& t);

/// Threshold violations of a mode, as human-readable messages.
std::vector<std::string> threshold_warnings(const FailureMode& mode, const ExtractionThresholds& t);

/// Parts with at least min_size members and accuracy below the baseline.
std::vector<FailureMode> select_failure_modes(const Partition& partition, const MapperGraph& g, const Dataset& d,
                                              const ExtractionThresholds& t);

/// Analyst-chosen node set. Thresholds are reported as warnings only.
/// Throws SelectionError for an empty selection or unknown node id.
FailureMode manual_select(const MapperGraph& g, std::span<const std::size_t> node_ids, const Dataset& d,
                          const ExtractionThresholds& t);

/// weight_edges -> louvain (AHCL initialized) -> select_failure_modes.
std::vector<FailureMode> extract_failure_modes(const MapperGraph& g, const Dataset& d, const FilterValues& supervision,
                                               const ExtractionThresholds& t);

/// Two-sample Kolmogorov-Smirnov statistic. Throws ArgumentError when either
/// sample is empty.
double ks_statistic(std::span<const double> a, std::span<const double> b);

struct KSEntry {
  std::size_t feature = 0;
  std::string name;
  double statistic = 0.0;
};

struct KSReport {
  std::string group;
  std::string reference;
  std::vector<KSEntry> features;  ///< descending statistic, ties by feature index
};

KSReport rank_features(std::span<const std::size_t> group, std::span<const std::size_t> reference, const Dataset& d,
                       std::size_t top_n, Execution exec = Execution::parallel);

}  // namespace fifa
