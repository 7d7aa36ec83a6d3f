#include "fifa/filters.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fifa/error.hpp"

namespace fifa {

FilterSpec FilterSpec::pca(bool standardize) {
  FilterSpec s;
  s.kind = FilterKind::pca_1;
  s.name = "pca_1";
  s.standardize = standardize;
  return s;
}

FilterSpec FilterSpec::meta(std::string field) {
  FilterSpec s;
  s.kind = FilterKind::meta_column;
  s.name = field;
  s.field = std::move(field);
  return s;
}

FilterSpec FilterSpec::feature(std::size_t index) {
  FilterSpec s;
  s.kind = FilterKind::feature_column;
  s.name = "feature_" + std::to_string(index);
  s.index = index;
  return s;
}

FilterSpec FilterSpec::external(std::string name, std::vector<double> values) {
  FilterSpec s;
  s.kind = FilterKind::external;
  s.name = std::move(name);
  s.values = std::move(values);
  return s;
}

FilterValues make_filter_values(std::string name, std::vector<double> values) {
  if (values.empty()) throw ValidationError("filter '" + name + "' has no values");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("filter '" + name + "' has a non-finite value");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  FilterValues f;
  f.lo = *lo;
  f.hi = *hi;
  f.name = std::move(name);
  f.values = std::move(values);
  return f;
}

std::vector<double> principal_axis(const Matrix& cov) {
  constexpr double kTolerance = 1e-10;
  constexpr int kMaxIterations = 10'000;
  const std::size_t d = cov.rows();

  // Fixed-seed random start: a structured start such as the row sums can be
  // exactly orthogonal to the top eigenvector (e.g. [[1, -r], [-r, 1]]).
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  std::vector<double> v(d);
  for (double& e : v) e = normal(rng);
  auto norm = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    return std::sqrt(s);
  };
  double n0 = norm(v);
  if (n0 == 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1.0;
  } else {
    for (double& e : v) e /= n0;
  }

  std::vector<double> w(d);
  for (int it = 0; it < kMaxIterations; ++it) {
    for (std::size_t a = 0; a < d; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < d; ++b) s += cov(a, b) * v[b];
      w[a] = s;
    }
    const double nw = norm(w);
    if (nw == 0.0) throw DegenerateFilterError("principal component undefined: covariance annihilates start vector");
    double change = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      w[a] /= nw;
      change += (w[a] - v[a]) * (w[a] - v[a]);
    }
    v.swap(w);
    if (std::sqrt(change) < kTolerance) break;
  }

  // Loadings within 1e-9 of the largest magnitude tie; the first one wins.
  double largest = 0.0;
  for (double e : v) largest = std::max(largest, std::abs(e));
  std::size_t pivot = 0;
  while (std::abs(v[pivot]) < largest - 1e-9) ++pivot;
  if (v[pivot] < 0.0) {
    for (double& e : v) e = -e;
  }
  return v;
}

FilterValues principal_component_1(const Dataset& d, Execution exec) {
  if (d.rows() < 2) throw InsufficientDataError("principal_component_1 needs at least 2 rows");
  if (d.cols() == 0) throw DegenerateFilterError("principal_component_1 needs at least one feature column");
  const Matrix& x = d.features();
  const Matrix cov = kernels::covariance(x, exec);
  double trace = 0.0;
  for (std::size_t a = 0; a < cov.rows(); ++a) trace += cov(a, a);
  if (trace == 0.0) throw DegenerateFilterError("principal_component_1: all rows identical");

  const auto axis = principal_axis(cov);
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) mean[c] += x(r, c);
  }
  for (double& m : mean) m /= static_cast<double>(x.rows());

  std::vector<double> scores(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) s += (x(r, c) - mean[c]) * axis[c];
    scores[r] = s;
  }
  return make_filter_values("pca_1", std::move(scores));
}

namespace {

Dataset standardized(const Dataset& d) {
  const auto var = column_variances(d);
  Matrix x = d.features();
  for (std::size_t c = 0; c < x.cols(); ++c) {
    if (var[c] <= 0.0) continue;
    const double sd = std::sqrt(var[c]);
    for (std::size_t r = 0; r < x.rows(); ++r) x(r, c) /= sd;
  }
  return Dataset(std::move(x), d.feature_names(), d.meta());
}

}  // namespace

FilterValues meta_filter(const Dataset& d, const std::string& field) {
  return make_filter_values(field, d.meta_values(field));
}

FilterValues compute_filter(const Dataset& d, const FilterSpec& spec, Execution exec) {
  switch (spec.kind) {
    case FilterKind::pca_1: {
      auto f = spec.standardize ? principal_component_1(standardized(d), exec) : principal_component_1(d, exec);
      if (!spec.name.empty()) f.name = spec.name;
      return f;
    }
    case FilterKind::meta_column: {
      auto f = meta_filter(d, spec.field);
      if (!spec.name.empty()) f.name = spec.name;
      return f;
    }
    case FilterKind::feature_column: {
      std::size_t idx = spec.index;
      if (!spec.field.empty()) {
        auto found = d.column_index(spec.field);
        if (!found) throw ConfigError("feature filter names unknown column '" + spec.field + "'");
        idx = *found;
      }
      if (idx >= d.cols()) throw ConfigError("feature filter index " + std::to_string(idx) + " out of range");
      return make_filter_values(spec.name.empty() ? d.feature_names()[idx] : spec.name, d.features().column(idx));
    }
    case FilterKind::external:
      if (spec.values.size() != d.rows()) {
        throw ConfigError("external filter '" + spec.name + "' has " + std::to_string(spec.values.size()) +
                          " values for " + std::to_string(d.rows()) + " rows");
      }
      return make_filter_values(spec.name, spec.values);
  }
  throw ConfigError("unknown filter kind");
}

std::optional<std::string> validate_fifa_filters(const std::vector<FilterSpec>& specs) {
  for (const auto& s : specs) {
    if (s.kind == FilterKind::meta_column && s.field == "error_measure") return std::nullopt;
  }
  return std::string("no prediction-error filter: groups are not guaranteed to be homogeneous in prediction failure");
}

}  // namespace fifa
