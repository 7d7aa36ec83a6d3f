#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fifa/artifacts.hpp"
#include "fifa/correction.hpp"
#include "fifa/dataset.hpp"
#include "fifa/failure_modes.hpp"
#include "fifa/filters.hpp"
#include "fifa/mapper.hpp"

namespace fifa {

/// A filter as declared in the config; external values come from a
/// single-column CSV resolved against the config directory.
struct FilterConfig {
  FilterSpec spec;
  std::string values_path;
};

struct PipelineConfig {
  /// Directory that relative paths are resolved against. Not hashed.
  std::filesystem::path base_dir;

  std::string dataset_path;
  std::string test_path;  ///< optional hold-out set used when folds < 2
  Schema schema;

  MetricKind metric = MetricKind::variance_normalized_euclidean;
  std::vector<FilterConfig> filters;
  std::vector<CoverSpec> covers;
  std::size_t bins = 10;
  std::size_t max_cell_size = 20'000;

  ExtractionThresholds extraction;
  ClassifierSpec classifier;

  /// k for k-fold evaluation; 0 or 1 runs a single train/evaluate pass.
  std::size_t folds = 0;
  std::string clean_flag = "clean";
  std::size_t top_n = 5;
  std::uint64_t seed = 7;

  /// Output directory. Not hashed.
  std::filesystem::path output;
};

inline const std::vector<double> kDefaultCGrid{0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};

/// Parses a config document. Unknown keys, missing required keys and
/// mismatched filter/cover counts throw ConfigError.
PipelineConfig parse_config(const json& doc, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Every parameter with defaults filled in, minus the output directory.
json canonical_config(const PipelineConfig& config);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffles 0..n-1 with `seed` and cuts it into k contiguous folds whose
/// sizes differ by at most one. Index lists are ascending. Throws
/// ArgumentError unless 2 <= k <= n.
std::vector<Split> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunReport {
  json document;
  std::vector<StageTiming> timing;
  std::vector<std::string> warnings;
};

/// One graph/train/evaluate pass: a single run, or one fold.
struct Workspace {
  std::size_t fold = 0;  ///< 0 for a single run, else 1-based
  std::filesystem::path dir;
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;  ///< ids in the source dataset
  std::vector<std::size_t> test_rows;
  bool test_is_train = false;
};

inline constexpr const char* kStaleFile = "stale.json";
inline constexpr const char* kSelectionsFile = "selections.json";

class Pipeline {
 public:
  /// Loads the input data and hashes the config together with the bytes
  /// of every input file.
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const noexcept { return config_; }
  const std::string& config_hash() const noexcept { return hash_; }
  const std::vector<Workspace>& workspaces() const noexcept { return workspaces_; }
  /// The workspace whose directory is `dir`. Throws InputError if none.
  const Workspace& workspace_for(const std::filesystem::path& dir) const;

  /// All stages in order, then the report. Any failure is rethrown as a
  /// StageError and leaves stale.json in the output directory.
  RunReport run();

  void build_graph();
  void extract();
  void train();
  void evaluate();
  void diagnose();
  RunReport report();

  /// Automatic modes followed by manual selections of one workspace.
  std::vector<FailureMode> load_modes(const Workspace& ws) const;
  /// Parses an artifact and checks its config hash.
  json load_artifact(const std::filesystem::path& path) const;

 private:
  template <class Fn>
  void stage(const std::string& name, Fn&& fn);

  void build_graph(const Workspace& ws);
  void extract(const Workspace& ws);
  void train(const Workspace& ws);
  void evaluate(const Workspace& ws);
  void diagnose(const Workspace& ws);

  std::vector<FilterSpec> filter_specs(const Workspace& ws) const;
  json stamp(json doc) const;

  PipelineConfig config_;
  std::string hash_;
  Dataset source_;
  std::vector<std::vector<double>> external_values_;
  std::vector<Workspace> workspaces_;
  std::vector<StageTiming> timing_;
  std::vector<std::string> warnings_;
};

/// Reads a single-column CSV (optional non-numeric header).
std::vector<double> load_filter_values(const std::filesystem::path& path);

}  // namespace fifa
