#include "fifa/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "fifa/error.hpp"

namespace fifa {

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::classification ? "classification" : "regression";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "classification") return TaskKind::classification;
  if (text == "regression") return TaskKind::regression;
  throw ConfigError("unknown task kind '" + std::string(text) + "'");
}

std::string_view to_string(MetricKind kind) {
  return kind == MetricKind::euclidean ? "euclidean" : "variance_normalized_euclidean";
}

MetricKind parse_metric_kind(std::string_view text) {
  if (text == "variance_normalized_euclidean" || text == "vne") {
    return MetricKind::variance_normalized_euclidean;
  }
  if (text == "euclidean") return MetricKind::euclidean;
  throw ConfigError("unknown metric kind '" + std::string(text) + "'");
}

namespace {

bool is_integral(double v) { return std::floor(v) == v; }

}  // namespace

Dataset::Dataset(Matrix features, std::vector<std::string> feature_names, Meta meta)
    : features_(std::move(features)), names_(std::move(feature_names)), meta_(std::move(meta)) {
  const std::size_t n = features_.rows();
  if (names_.size() != features_.cols()) {
    throw ValidationError("feature_names has " + std::to_string(names_.size()) + " entries, expected " +
                          std::to_string(features_.cols()));
  }
  if (meta_.ground_truth.size() != n || meta_.prediction.size() != n || meta_.error_measure.size() != n) {
    throw ValidationError("metadata columns must have one entry per row");
  }
  for (const auto& [name, values] : meta_.flags) {
    if (values.size() != n) throw ValidationError("flag '" + name + "' has wrong length");
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < features_.cols(); ++c) {
      if (!std::isfinite(features_(r, c))) {
        throw ValidationError("non-finite feature at row " + std::to_string(r) + ", column '" + names_[c] + "'");
      }
    }
    if (!std::isfinite(meta_.error_measure[r])) {
      throw ValidationError("non-finite error_measure at row " + std::to_string(r));
    }
    if (!std::isfinite(meta_.ground_truth[r]) || !std::isfinite(meta_.prediction[r])) {
      throw ValidationError("non-finite ground_truth/prediction at row " + std::to_string(r));
    }
    if (meta_.task == TaskKind::classification &&
        (!is_integral(meta_.ground_truth[r]) || !is_integral(meta_.prediction[r]))) {
      throw ValidationError("classification labels must be integers (row " + std::to_string(r) + ")");
    }
  }
}

std::optional<std::size_t> Dataset::column_index(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

bool Dataset::has_meta_field(std::string_view field) const {
  return field == "ground_truth" || field == "prediction" || field == "error_measure" ||
         meta_.flags.count(std::string(field)) > 0;
}

std::vector<double> Dataset::meta_values(std::string_view field) const {
  if (field == "ground_truth") return meta_.ground_truth;
  if (field == "prediction") return meta_.prediction;
  if (field == "error_measure") return meta_.error_measure;
  if (auto it = meta_.flags.find(std::string(field)); it != meta_.flags.end()) {
    return {it->second.begin(), it->second.end()};
  }
  throw ConfigError("unknown meta field '" + std::string(field) + "'");
}

bool Dataset::is_correct(std::size_t row, double regression_tolerance) const {
  if (meta_.task == TaskKind::classification) return meta_.prediction[row] == meta_.ground_truth[row];
  return std::abs(residual(row)) <= regression_tolerance;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Meta m;
  m.task = meta_.task;
  m.ground_truth.reserve(rows.size());
  m.prediction.reserve(rows.size());
  m.error_measure.reserve(rows.size());
  for (std::size_t r : rows) {
    m.ground_truth.push_back(meta_.ground_truth.at(r));
    m.prediction.push_back(meta_.prediction[r]);
    m.error_measure.push_back(meta_.error_measure[r]);
  }
  for (const auto& [name, values] : meta_.flags) {
    auto& out = m.flags[name];
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(values[r]);
  }
  return Dataset(features_.select_rows(rows), names_, std::move(m));
}

Dataset Dataset::with_columns(std::span<const std::size_t> cols) const {
  std::vector<std::string> names;
  for (std::size_t c : cols) names.push_back(names_.at(c));
  return Dataset(features_.select_cols(cols), std::move(names), meta_);
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

enum class Role { feature, ground_truth, prediction, error_measure, flag, ignored };

}  // namespace

Dataset read_dataset(std::istream& in, const Schema& schema) {
  if (schema.ground_truth.empty() || schema.prediction.empty() || schema.error_measure.empty()) {
    throw SchemaError("schema must name ground_truth, prediction and error_measure columns");
  }
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty input: missing header row");
  const auto header_views = split(line);
  std::vector<std::string> header(header_views.begin(), header_views.end());

  std::set<std::string> seen;
  for (const auto& h : header) {
    if (!seen.insert(h).second) throw SchemaError("duplicate column '" + h + "' in header");
  }

  std::vector<Role> roles(header.size(), Role::feature);
  std::vector<std::string> claimed;
  auto claim = [&](const std::string& name, Role role) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("schema column '" + name + "' not present in header");
    auto idx = static_cast<std::size_t>(it - header.begin());
    if (roles[idx] != Role::feature) throw SchemaError("column '" + name + "' claimed twice by schema");
    roles[idx] = role;
  };
  claim(schema.ground_truth, Role::ground_truth);
  claim(schema.prediction, Role::prediction);
  claim(schema.error_measure, Role::error_measure);
  for (const auto& f : schema.flags) claim(f, Role::flag);
  for (const auto& f : schema.ignore) claim(f, Role::ignored);

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (roles[c] == Role::feature) names.push_back(header[c]);
  }

  Meta meta;
  meta.task = schema.task;
  for (const auto& f : schema.flags) meta.flags[f];
  std::vector<double> values;
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + " (line " + std::to_string(line_no) + ") has " +
                           std::to_string(cells.size()) + " cells, expected " + std::to_string(header.size()),
                       row, "");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (roles[c] == Role::ignored) continue;
      auto v = parse_number(cells[c]);
      if (roles[c] == Role::flag && !v) {
        if (cells[c] == "true") v = 1.0;
        if (cells[c] == "false") v = 0.0;
      }
      if (!v) {
        throw ParseError("non-numeric value '" + std::string(cells[c]) + "' at row " + std::to_string(row) +
                             " (line " + std::to_string(line_no) + "), column '" + header[c] + "'",
                         row, header[c]);
      }
      if (!std::isfinite(*v)) {
        throw ValidationError("non-finite value at row " + std::to_string(row) + ", column '" + header[c] + "'");
      }
      switch (roles[c]) {
        case Role::feature: values.push_back(*v); break;
        case Role::ground_truth: meta.ground_truth.push_back(*v); break;
        case Role::prediction: meta.prediction.push_back(*v); break;
        case Role::error_measure: meta.error_measure.push_back(*v); break;
        case Role::flag:
          if (*v != 0.0 && *v != 1.0) {
            throw ParseError("flag column '" + header[c] + "' must be 0/1 at row " + std::to_string(row), row,
                             header[c]);
          }
          meta.flags[header[c]].push_back(static_cast<std::uint8_t>(*v));
          break;
        case Role::ignored: break;
      }
    }
    ++row;
  }
  if (row == 0) throw ValidationError("dataset has no rows");
  Matrix features(row, names.size(), std::move(values));
  return Dataset(std::move(features), std::move(names), std::move(meta));
}

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset '" + path.string() + "'");
  return read_dataset(in, schema);
}

void write_dataset_csv(std::ostream& out, const Dataset& d) {
  std::ostringstream buf;
  buf.precision(17);
  for (const auto& n : d.feature_names()) buf << n << ',';
  buf << "ground_truth,prediction,error_measure";
  for (const auto& [name, _] : d.meta().flags) buf << ',' << name;
  buf << '\n';
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (double v : d.features().row(r)) buf << v << ',';
    buf << d.meta().ground_truth[r] << ',' << d.meta().prediction[r] << ',' << d.meta().error_measure[r];
    for (const auto& [_, values] : d.meta().flags) buf << ',' << int(values[r]);
    buf << '\n';
  }
  out << buf.str();
}

// ---------------------------------------------------------------------------
// Metric

std::vector<double> column_variances(const Dataset& d) {
  const std::size_t n = d.rows();
  if (n < 2) throw InsufficientDataError("column_variances needs at least 2 rows, got " + std::to_string(n));
  std::vector<double> mean(d.cols(), 0.0);
  std::vector<double> var(d.cols(), 0.0);
  const auto& x = d.features();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d.cols(); ++c) mean[c] += x(r, c);
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d.cols(); ++c) {
      const double dev = x(r, c) - mean[c];
      var[c] += dev * dev;
    }
  }
  for (double& v : var) v /= static_cast<double>(n);
  return var;
}

MetricSpec make_metric(const Dataset& d, MetricKind kind) {
  MetricSpec m;
  m.kind = kind;
  if (kind == MetricKind::euclidean) {
    for (std::size_t c = 0; c < d.cols(); ++c) m.columns.push_back(c);
    return m;
  }
  const auto var = d.rows() < 2 ? std::vector<double>(d.cols(), 0.0) : column_variances(d);
  for (std::size_t c = 0; c < var.size(); ++c) {
    if (var[c] > 0.0) {
      m.columns.push_back(c);
      m.variances.push_back(var[c]);
    } else {
      m.excluded.push_back(c);
    }
  }
  return m;
}

void validate_metric(const Dataset& d, const MetricSpec& m) {
  for (std::size_t c : m.columns) {
    if (c >= d.cols()) throw ConfigError("metric column " + std::to_string(c) + " out of range");
  }
  if (m.kind == MetricKind::variance_normalized_euclidean) {
    if (m.variances.size() != m.columns.size()) {
      throw ConfigError("VNE metric has " + std::to_string(m.variances.size()) + " variances for " +
                        std::to_string(m.columns.size()) + " columns");
    }
    for (double v : m.variances) {
      if (!(v > 0.0)) throw ConfigError("VNE variances must be positive");
    }
  }
}

double distance(const Dataset& d, const MetricSpec& m, std::size_t i, std::size_t j) {
  const bool vne = m.kind == MetricKind::variance_normalized_euclidean;
  if (vne && m.variances.size() != m.columns.size()) {
    throw ConfigError("VNE variance vector length does not match column count");
  }
  const auto a = d.features().row(i);
  const auto b = d.features().row(j);
  double sum = 0.0;
  for (std::size_t k = 0; k < m.columns.size(); ++k) {
    const std::size_t c = m.columns[k];
    const double diff = a[c] - b[c];
    sum += vne ? diff * diff / m.variances[k] : diff * diff;
  }
  return std::sqrt(sum);
}

Matrix embed(const Dataset& d, const MetricSpec& m, std::span<const std::size_t> rows) {
  const bool vne = m.kind == MetricKind::variance_normalized_euclidean;
  std::vector<double> scale(m.columns.size(), 1.0);
  if (vne) {
    for (std::size_t k = 0; k < scale.size(); ++k) scale[k] = 1.0 / std::sqrt(m.variances[k]);
  }
  Matrix out(rows.size(), m.columns.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = d.features().row(rows[i]);
    auto dst = out.row(i);
    for (std::size_t k = 0; k < m.columns.size(); ++k) dst[k] = src[m.columns[k]] * scale[k];
  }
  return out;
}

}  // namespace fifa
