#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fifa/matrix.hpp"

namespace fifa {

enum class TaskKind { classification, regression };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);

/// Per-instance metadata. Ground truth and prediction share the task kind;
/// categorical labels are stored as their integer values.
struct Meta {
  TaskKind task = TaskKind::classification;
  std::vector<double> ground_truth;
  std::vector<double> prediction;
  /// The prediction-error quantity (e.g. probability of the true class, or a
  /// signed residual for regression).
  std::vector<double> error_measure;
  std::map<std::string, std::vector<std::uint8_t>> flags;
};

/// Which CSV columns carry metadata. Every other column is a feature unless
/// listed in `ignore`.
struct Schema {
  std::string ground_truth;
  std::string prediction;
  std::string error_measure;
  std::vector<std::string> flags;
  std::vector<std::string> ignore;
  TaskKind task = TaskKind::classification;
};

/// The finite metric space X: an immutable feature matrix plus metadata.
class Dataset {
 public:
  Dataset() = default;
  /// Validates shapes and finiteness; throws ValidationError.
  Dataset(Matrix features, std::vector<std::string> feature_names, Meta meta);

  std::size_t rows() const noexcept { return features_.rows(); }
  std::size_t cols() const noexcept { return features_.cols(); }
  const Matrix& features() const noexcept { return features_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  const Meta& meta() const noexcept { return meta_; }
  TaskKind task() const noexcept { return meta_.task; }

  std::optional<std::size_t> column_index(std::string_view name) const;

  /// Values of a metadata field by name: "ground_truth", "prediction",
  /// "error_measure" or an aux flag. Throws ConfigError for unknown names.
  std::vector<double> meta_values(std::string_view field) const;
  bool has_meta_field(std::string_view field) const;

  /// Whether the upstream prediction is counted as correct. Classification
  /// compares labels; regression uses |prediction - ground_truth| <= tolerance.
  bool is_correct(std::size_t row, double regression_tolerance) const;
  double residual(std::size_t row) const { return meta_.prediction[row] - meta_.ground_truth[row]; }

  /// New dataset holding the given rows (renumbered 0..rows.size()-1).
  Dataset subset(std::span<const std::size_t> rows) const;
  /// New dataset restricted to the given feature columns.
  Dataset with_columns(std::span<const std::size_t> cols) const;

 private:
  Matrix features_;
  std::vector<std::string> names_;
  Meta meta_;
};

Dataset read_dataset(std::istream& in, const Schema& schema);
Dataset load_dataset(const std::filesystem::path& path, const Schema& schema);
void write_dataset_csv(std::ostream& out, const Dataset& d);

/// Population variance of every feature column. Throws InsufficientDataError
/// when fewer than two rows exist.
std::vector<double> column_variances(const Dataset& d);

enum class MetricKind { variance_normalized_euclidean, euclidean };

std::string_view to_string(MetricKind kind);
MetricKind parse_metric_kind(std::string_view text);

struct MetricSpec {
  MetricKind kind = MetricKind::variance_normalized_euclidean;
  /// Feature columns that take part in the distance.
  std::vector<std::size_t> columns;
  /// Aligned with `columns`; populated for VNE only, every entry > 0.
  std::vector<double> variances;
  /// Zero-variance columns dropped from a VNE metric.
  std::vector<std::size_t> excluded;
};

/// VNE drops zero-variance columns; with a single row every column is dropped.
MetricSpec make_metric(const Dataset& d, MetricKind kind);

/// Throws ConfigError if the spec does not fit the dataset.
void validate_metric(const Dataset& d, const MetricSpec& m);

double distance(const Dataset& d, const MetricSpec& m, std::size_t i, std::size_t j);

/// Rows mapped into a space where the plain Euclidean distance equals the
/// metric: included columns only, VNE columns divided by their standard
/// deviation.
Matrix embed(const Dataset& d, const MetricSpec& m, std::span<const std::size_t> rows);

}  // namespace fifa
