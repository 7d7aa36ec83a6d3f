#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fifa/dataset.hpp"
#include "fifa/kernels.hpp"

namespace fifa {

enum class FilterKind { pca_1, meta_column, feature_column, external };

/// One filter function f_i declared by the pipeline.
struct FilterSpec {
  FilterKind kind = FilterKind::pca_1;
  std::string name;
  /// meta_column: the field; feature_column: optional column name.
  std::string field;
  /// feature_column: column index when `field` is empty.
  std::size_t index = 0;
  /// external: one value per row.
  std::vector<double> values;
  /// pca_1 only: divide columns by their standard deviation first.
  bool standardize = false;

  static FilterSpec pca(bool standardize = false);
  static FilterSpec meta(std::string field);
  static FilterSpec feature(std::size_t index);
  static FilterSpec external(std::string name, std::vector<double> values);
};

/// f_i evaluated on every row together with its range [a_i, b_i].
struct FilterValues {
  std::string name;
  std::vector<double> values;
  double lo = 0.0;
  double hi = 0.0;

  bool degenerate() const noexcept { return lo == hi; }
};

FilterValues make_filter_values(std::string name, std::vector<double> values);

/// Top principal component scores of the mean-centered rows. The loading
/// vector's largest-magnitude coordinate is made positive (lowest index wins
/// ties within 1e-9). Power iteration on the covariance matrix.
FilterValues principal_component_1(const Dataset& d, Execution exec = Execution::parallel);

/// Unit eigenvector used by principal_component_1 (exposed for tests).
std::vector<double> principal_axis(const Matrix& covariance);

FilterValues meta_filter(const Dataset& d, const std::string& field);

FilterValues compute_filter(const Dataset& d, const FilterSpec& spec, Execution exec = Execution::parallel);

/// A FiFa model needs the prediction error among its filters; returns a
/// warning message when none of the specs uses it.
std::optional<std::string> validate_fifa_filters(const std::vector<FilterSpec>& specs);

}  // namespace fifa
