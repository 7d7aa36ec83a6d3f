#include "fifa/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "fifa/community.hpp"
#include "fifa/error.hpp"

namespace fifa {

namespace fs = std::filesystem;

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <class T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing required key '" + key + "'");
  return get_or<T>(obj, key, T{}, where);
}

FilterConfig parse_filter(const json& f, std::size_t i) {
  const std::string where = "filters[" + std::to_string(i) + "]";
  check_keys(f, {"kind", "standardize", "field", "column", "index", "name", "path"}, where);
  const auto kind = require<std::string>(f, "kind", where);
  FilterConfig out;
  if (kind == "pca_1") {
    out.spec = FilterSpec::pca(get_or<bool>(f, "standardize", false, where));
  } else if (kind == "meta") {
    out.spec = FilterSpec::meta(require<std::string>(f, "field", where));
  } else if (kind == "feature") {
    if (f.contains("column")) {
      out.spec = FilterSpec::feature(0);
      out.spec.field = require<std::string>(f, "column", where);
      out.spec.name = out.spec.field;
    } else {
      out.spec = FilterSpec::feature(require<std::size_t>(f, "index", where));
    }
  } else if (kind == "external") {
    out.spec = FilterSpec::external(require<std::string>(f, "name", where), {});
    out.values_path = require<std::string>(f, "path", where);
  } else {
    throw ConfigError(where + ".kind: expected pca_1, meta, feature or external, got '" + kind + "'");
  }
  return out;
}

json filter_json(const FilterConfig& f) {
  switch (f.spec.kind) {
    case FilterKind::pca_1:
      return {{"kind", "pca_1"}, {"standardize", f.spec.standardize}};
    case FilterKind::meta_column:
      return {{"kind", "meta"}, {"field", f.spec.field}};
    case FilterKind::feature_column:
      if (!f.spec.field.empty()) return {{"kind", "feature"}, {"column", f.spec.field}};
      return {{"kind", "feature"}, {"index", f.spec.index}};
    case FilterKind::external:
      return {{"kind", "external"}, {"name", f.spec.name}, {"path", f.values_path}};
  }
  return {};
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<double> pick(const std::vector<double>& values, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(values[r]);
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

PipelineConfig parse_config(const json& doc, const fs::path& base_dir) {
  check_keys(doc,
             {"dataset", "metric", "filters", "covers", "clustering", "extraction", "classifier", "evaluation",
              "diagnostics", "seed", "output"},
             "config");
  PipelineConfig c;
  c.base_dir = base_dir;

  if (!doc.contains("dataset")) throw ConfigError("config: missing required section 'dataset'");
  const auto& ds = doc.at("dataset");
  check_keys(ds, {"path", "test_path", "task", "ground_truth", "prediction", "error_measure", "flags", "ignore"},
             "dataset");
  c.dataset_path = require<std::string>(ds, "path", "dataset");
  c.test_path = get_or<std::string>(ds, "test_path", "", "dataset");
  c.schema.ground_truth = require<std::string>(ds, "ground_truth", "dataset");
  c.schema.prediction = require<std::string>(ds, "prediction", "dataset");
  c.schema.error_measure = require<std::string>(ds, "error_measure", "dataset");
  c.schema.flags = get_or<std::vector<std::string>>(ds, "flags", {}, "dataset");
  c.schema.ignore = get_or<std::vector<std::string>>(ds, "ignore", {}, "dataset");
  try {
    c.schema.task = parse_task_kind(get_or<std::string>(ds, "task", "classification", "dataset"));
    c.metric = parse_metric_kind(get_or<std::string>(doc, "metric", "variance_normalized_euclidean", "config"));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  if (!doc.contains("filters") || !doc.at("filters").is_array() || doc.at("filters").empty()) {
    throw ConfigError("config: 'filters' must be a non-empty array");
  }
  for (std::size_t i = 0; i < doc.at("filters").size(); ++i) c.filters.push_back(parse_filter(doc.at("filters")[i], i));

  if (!doc.contains("covers") || !doc.at("covers").is_array()) throw ConfigError("config: 'covers' must be an array");
  for (std::size_t i = 0; i < doc.at("covers").size(); ++i) {
    const auto& cv = doc.at("covers")[i];
    const std::string where = "covers[" + std::to_string(i) + "]";
    check_keys(cv, {"intervals", "overlap"}, where);
    CoverSpec spec;
    spec.intervals = get_or<std::size_t>(cv, "intervals", spec.intervals, where);
    spec.overlap = get_or<double>(cv, "overlap", spec.overlap, where);
    validate_cover(spec);
    c.covers.push_back(spec);
  }
  if (c.covers.size() != c.filters.size()) {
    throw ConfigError("config: " + std::to_string(c.filters.size()) + " filters but " +
                      std::to_string(c.covers.size()) + " covers");
  }

  if (doc.contains("clustering")) {
    const auto& cl = doc.at("clustering");
    check_keys(cl, {"bins", "max_cell_size"}, "clustering");
    c.bins = get_or<std::size_t>(cl, "bins", c.bins, "clustering");
    c.max_cell_size = get_or<std::size_t>(cl, "max_cell_size", c.max_cell_size, "clustering");
  }
  if (c.bins < 1) throw ConfigError("clustering.bins must be >= 1");

  if (doc.contains("extraction")) {
    const auto& ex = doc.at("extraction");
    check_keys(ex, {"min_size", "baseline_accuracy", "regression_tolerance"}, "extraction");
    c.extraction.min_size = get_or<std::size_t>(ex, "min_size", c.extraction.min_size, "extraction");
    c.extraction.baseline_accuracy = get_or<double>(ex, "baseline_accuracy", c.extraction.baseline_accuracy, "extraction");
    c.extraction.regression_tolerance =
        get_or<double>(ex, "regression_tolerance", c.extraction.regression_tolerance, "extraction");
  }
  if (!(c.extraction.baseline_accuracy >= 0.0 && c.extraction.baseline_accuracy <= 1.0)) {
    throw ConfigError("extraction.baseline_accuracy must lie in [0, 1]");
  }
  if (!(c.extraction.regression_tolerance >= 0.0)) throw ConfigError("extraction.regression_tolerance must be >= 0");

  c.classifier.c_grid = kDefaultCGrid;
  if (doc.contains("classifier")) {
    const auto& cf = doc.at("classifier");
    check_keys(cf, {"kind", "C", "c_grid", "cv_folds", "balance_classes", "tolerance", "max_iterations"}, "classifier");
    try {
      c.classifier.kind = parse_classifier_kind(get_or<std::string>(cf, "kind", "linear_svm", "classifier"));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    c.classifier.C = get_or<double>(cf, "C", c.classifier.C, "classifier");
    c.classifier.c_grid = get_or<std::vector<double>>(cf, "c_grid", c.classifier.c_grid, "classifier");
    c.classifier.cv_folds = get_or<std::size_t>(cf, "cv_folds", c.classifier.cv_folds, "classifier");
    c.classifier.balance_classes = get_or<bool>(cf, "balance_classes", false, "classifier");
    c.classifier.tolerance = get_or<double>(cf, "tolerance", c.classifier.tolerance, "classifier");
    c.classifier.max_iterations = get_or<std::size_t>(cf, "max_iterations", c.classifier.max_iterations, "classifier");
  }
  if (!(c.classifier.C > 0.0)) throw ConfigError("classifier.C must be > 0");
  for (double v : c.classifier.c_grid) {
    if (!(v > 0.0)) throw ConfigError("classifier.c_grid values must be > 0");
  }
  if (c.classifier.cv_folds < 2) throw ConfigError("classifier.cv_folds must be >= 2");

  if (doc.contains("evaluation")) {
    const auto& ev = doc.at("evaluation");
    check_keys(ev, {"folds", "clean_flag"}, "evaluation");
    c.folds = get_or<std::size_t>(ev, "folds", c.folds, "evaluation");
    c.clean_flag = get_or<std::string>(ev, "clean_flag", c.clean_flag, "evaluation");
  }
  if (doc.contains("diagnostics")) {
    const auto& dg = doc.at("diagnostics");
    check_keys(dg, {"top_n"}, "diagnostics");
    c.top_n = get_or<std::size_t>(dg, "top_n", c.top_n, "diagnostics");
  }
  if (c.top_n < 1) throw ConfigError("diagnostics.top_n must be >= 1");
  c.seed = get_or<std::uint64_t>(doc, "seed", c.seed, "config");
  c.output = resolve(base_dir, get_or<std::string>(doc, "output", "out", "config"));
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  json doc;
  try {
    doc = read_json(path);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(doc, fs::absolute(path).parent_path());
}

json canonical_config(const PipelineConfig& c) {
  json filters = json::array();
  for (const auto& f : c.filters) filters.push_back(filter_json(f));
  json covers = json::array();
  for (const auto& cv : c.covers) covers.push_back({{"intervals", cv.intervals}, {"overlap", cv.overlap}});
  json dataset = {{"path", c.dataset_path},
                  {"task", to_string(c.schema.task)},
                  {"ground_truth", c.schema.ground_truth},
                  {"prediction", c.schema.prediction},
                  {"error_measure", c.schema.error_measure},
                  {"flags", c.schema.flags},
                  {"ignore", c.schema.ignore}};
  if (!c.test_path.empty()) dataset["test_path"] = c.test_path;
  return {{"dataset", dataset},
          {"metric", to_string(c.metric)},
          {"filters", filters},
          {"covers", covers},
          {"clustering", {{"bins", c.bins}, {"max_cell_size", c.max_cell_size}}},
          {"extraction",
           {{"min_size", c.extraction.min_size},
            {"baseline_accuracy", c.extraction.baseline_accuracy},
            {"regression_tolerance", c.extraction.regression_tolerance}}},
          {"classifier",
           {{"kind", to_string(c.classifier.kind)},
            {"C", c.classifier.C},
            {"c_grid", c.classifier.c_grid},
            {"cv_folds", c.classifier.cv_folds},
            {"balance_classes", c.classifier.balance_classes},
            {"tolerance", c.classifier.tolerance},
            {"max_iterations", c.classifier.max_iterations}}},
          {"evaluation", {{"folds", c.folds}, {"clean_flag", c.clean_flag}}},
          {"diagnostics", {{"top_n", c.top_n}}},
          {"seed", c.seed}};
}

std::vector<Split> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("kfold_split: k must be >= 2");
  if (k > n) throw ArgumentError("kfold_split: k = " + std::to_string(k) + " exceeds row count " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Split> out(k);
  std::size_t begin = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    std::vector<char> in_test(n, 0);
    for (std::size_t i = begin; i < begin + size; ++i) in_test[order[i]] = 1;
    for (std::size_t r = 0; r < n; ++r) (in_test[r] ? out[f].test : out[f].train).push_back(r);
    begin += size;
  }
  return out;
}

std::vector<double> load_filter_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open filter values '" + path.string() + "'");
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    const std::string cell = line.substr(first, last - first + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
      if (line_no == 1) continue;
      throw ParseError("filter values '" + path.string() + "': line " + std::to_string(line_no) +
                           " is not a number: '" + cell + "'",
                       out.size(), path.filename().string());
    }
    out.push_back(v);
  }
  return out;
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
  const fs::path data_path = resolve(config_.base_dir, config_.dataset_path);
  std::string material = canonical_config(config_).dump();
  material += "\n" + fnv1a_hex(file_bytes(data_path));
  source_ = load_dataset(data_path, config_.schema);

  for (const auto& f : config_.filters) {
    if (f.spec.kind != FilterKind::external) {
      external_values_.emplace_back();
      continue;
    }
    const fs::path p = resolve(config_.base_dir, f.values_path);
    material += "\n" + fnv1a_hex(file_bytes(p));
    auto values = load_filter_values(p);
    if (values.size() != source_.rows()) {
      throw ConfigError("external filter '" + f.spec.name + "' has " + std::to_string(values.size()) +
                        " values for " + std::to_string(source_.rows()) + " rows");
    }
    external_values_.push_back(std::move(values));
  }

  std::vector<FilterSpec> specs;
  for (const auto& f : config_.filters) specs.push_back(f.spec);
  if (auto w = validate_fifa_filters(specs)) warnings_.push_back(*w);

  if (config_.folds >= 2) {
    const auto splits = kfold_split(source_.rows(), config_.folds, config_.seed);
    for (std::size_t f = 0; f < splits.size(); ++f) {
      Workspace ws;
      ws.fold = f + 1;
      ws.dir = config_.output / ("fold-" + std::to_string(f + 1));
      ws.train_rows = splits[f].train;
      ws.test_rows = splits[f].test;
      ws.train = source_.subset(ws.train_rows);
      ws.test = source_.subset(ws.test_rows);
      workspaces_.push_back(std::move(ws));
    }
  } else {
    Workspace ws;
    ws.dir = config_.output;
    ws.train_rows.resize(source_.rows());
    std::iota(ws.train_rows.begin(), ws.train_rows.end(), std::size_t{0});
    ws.train = source_;
    if (!config_.test_path.empty()) {
      const fs::path test_path = resolve(config_.base_dir, config_.test_path);
      material += "\n" + fnv1a_hex(file_bytes(test_path));
      ws.test = load_dataset(test_path, config_.schema);
      if (ws.test.feature_names() != ws.train.feature_names()) {
        throw ConfigError("test set columns differ from the training set");
      }
    } else {
      ws.test = source_;
      ws.test_is_train = true;
      warnings_.push_back("no test set and folds < 2: evaluation uses the training rows");
    }
    ws.test_rows.resize(ws.test.rows());
    std::iota(ws.test_rows.begin(), ws.test_rows.end(), std::size_t{0});
    workspaces_.push_back(std::move(ws));
  }
  hash_ = fnv1a_hex(material);
}

const Workspace& Pipeline::workspace_for(const fs::path& dir) const {
  const auto want = fs::weakly_canonical(dir);
  for (const auto& ws : workspaces_) {
    if (fs::weakly_canonical(ws.dir) == want) return ws;
  }
  throw InputError("'" + dir.string() + "' is not an artifact directory of this config");
}

json Pipeline::stamp(json doc) const {
  doc["config_hash"] = hash_;
  return doc;
}

json Pipeline::load_artifact(const fs::path& path) const {
  if (!fs::exists(path)) throw InputError("missing artifact '" + path.string() + "'");
  json doc = read_json(path);
  const auto found = doc.value("config_hash", std::string{});
  if (found != hash_) {
    throw InputError("artifact '" + path.string() + "' has config hash '" + found + "' but the current config is '" +
                     hash_ + "'; rerun the upstream stages");
  }
  return doc;
}

template <class Fn>
void Pipeline::stage(const std::string& name, Fn&& fn) {
  const auto stale = config_.output / kStaleFile;
  const auto start = std::chrono::steady_clock::now();
  try {
    fn();
  } catch (const std::exception& e) {
    write_json(stale, {{"stage", name}, {"cause", e.what()}, {"config_hash", hash_}});
    throw StageError(name, e.what());
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  timing_.push_back({name, elapsed.count()});
  if (fs::exists(stale)) {
    const auto doc = read_json(stale);
    if (doc.value("stage", std::string{}) == name) fs::remove(stale);
  }
}

std::vector<FilterSpec> Pipeline::filter_specs(const Workspace& ws) const {
  std::vector<FilterSpec> out;
  for (std::size_t i = 0; i < config_.filters.size(); ++i) {
    FilterSpec spec = config_.filters[i].spec;
    if (spec.kind == FilterKind::external) spec.values = pick(external_values_[i], ws.train_rows);
    out.push_back(std::move(spec));
  }
  return out;
}

void Pipeline::build_graph(const Workspace& ws) {
  const auto specs = filter_specs(ws);
  std::vector<FilterValues> filters;
  for (const auto& s : specs) filters.push_back(compute_filter(ws.train, s));
  const MetricSpec metric = make_metric(ws.train, config_.metric);

  MapperOptions options;
  options.bins = config_.bins;
  options.max_cell_size = config_.max_cell_size;
  options.regression_tolerance = config_.extraction.regression_tolerance;
  const MapperGraph g = build_mapper(ws.train, metric, filters, config_.covers, options);

  json doc = to_json(g);
  json fdoc = json::array();
  for (const auto& f : filters) fdoc.push_back({{"name", f.name}, {"lo", f.lo}, {"hi", f.hi}});
  json warnings = json::array();
  for (auto c : metric.excluded) {
    warnings.push_back("feature '" + ws.train.feature_names()[c] + "' has zero variance and is excluded from the metric");
  }
  for (const auto& f : filters) {
    if (f.degenerate()) warnings.push_back("filter '" + f.name + "' is constant");
  }
  doc["fold"] = ws.fold;
  doc["filters"] = fdoc;
  doc["metric"] = {{"kind", to_string(metric.kind)}, {"excluded_columns", metric.excluded}};
  doc["source_rows"] = ws.train_rows;
  doc["warnings"] = warnings;
  doc["config"] = canonical_config(config_);
  write_json(ws.dir / "graph.json", stamp(std::move(doc)));
}

void Pipeline::extract(const Workspace& ws) {
  const MapperGraph g = graph_from_json(load_artifact(ws.dir / "graph.json"));
  const FilterValues supervision = meta_filter(ws.train, "error_measure");
  const WeightedGraph wg = weight_edges(g, supervision);
  const Partition partition = louvain(wg);
  const auto modes = select_failure_modes(partition, g, ws.train, config_.extraction);

  json mdoc = json::array();
  for (const auto& m : modes) mdoc.push_back(to_json(m));
  write_json(ws.dir / "modes.json",
             stamp({{"fold", ws.fold},
                    {"partition", partition},
                    {"parts", part_count(partition)},
                    {"modularity", modularity(wg, partition)},
                    {"modes", mdoc}}));
}

std::vector<FailureMode> Pipeline::load_modes(const Workspace& ws) const {
  std::vector<FailureMode> out;
  const json automatic = load_artifact(ws.dir / "modes.json");
  for (const auto& m : automatic.at("modes")) out.push_back(failure_mode_from_json(m));
  const auto sel = ws.dir / kSelectionsFile;
  if (fs::exists(sel)) {
    const json manual = load_artifact(sel);
    for (const auto& m : manual.at("modes")) out.push_back(failure_mode_from_json(m));
  }
  return out;
}

void Pipeline::train(const Workspace& ws) {
  const auto modes = load_modes(ws);
  const CorrectionEnsemble ens = train_ensemble(modes, ws.train, config_.classifier);
  json doc = to_json(ens);
  doc["fold"] = ws.fold;
  write_json(ws.dir / "ensemble.json", stamp(std::move(doc)));
}

void Pipeline::evaluate(const Workspace& ws) {
  const CorrectionEnsemble ens = ensemble_from_json(load_artifact(ws.dir / "ensemble.json"));
  const auto result = evaluate_ensemble(ens, ws.test, config_.clean_flag, config_.extraction.regression_tolerance);
  const auto bias = evaluate_bias(ens, ws.test, config_.clean_flag);
  json bdoc = json::array();
  for (const auto& b : bias) bdoc.push_back(to_json(b));
  write_json(ws.dir / "evaluation.json", stamp({{"fold", ws.fold},
                                                {"test_rows", ws.test_rows},
                                                {"test_is_train", ws.test_is_train},
                                                {"evaluation", to_json(result)},
                                                {"corrected_predictions", result.corrected_predictions},
                                                {"bias", bdoc}}));
}

void Pipeline::diagnose(const Workspace& ws) {
  const auto modes = load_modes(ws);
  json reports = json::array();
  for (const auto& m : modes) {
    std::vector<std::size_t> rest;
    std::size_t k = 0;
    for (std::size_t r = 0; r < ws.train.rows(); ++r) {
      if (k < m.members.size() && m.members[k] == r) {
        ++k;
      } else {
        rest.push_back(r);
      }
    }
    if (rest.empty()) continue;
    KSReport rep = rank_features(m.members, rest, ws.train, config_.top_n);
    rep.group = "mode " + std::to_string(m.id);
    rep.reference = "rest";
    json doc = to_json(rep);
    doc["mode_id"] = m.id;
    reports.push_back(std::move(doc));
  }
  write_json(ws.dir / "diagnostics.json", stamp({{"fold", ws.fold}, {"reports", reports}}));
}

void Pipeline::build_graph() {
  stage("build_graph", [&] {
    for (const auto& ws : workspaces_) build_graph(ws);
  });
}

void Pipeline::extract() {
  stage("extract", [&] {
    for (const auto& ws : workspaces_) extract(ws);
  });
}

void Pipeline::train() {
  stage("train", [&] {
    for (const auto& ws : workspaces_) train(ws);
  });
}

void Pipeline::evaluate() {
  stage("evaluate", [&] {
    for (const auto& ws : workspaces_) evaluate(ws);
  });
}

void Pipeline::diagnose() {
  stage("diagnose", [&] {
    for (const auto& ws : workspaces_) diagnose(ws);
  });
}

RunReport Pipeline::report() {
  RunReport out;
  stage("report", [&] {
    std::vector<std::string> warnings = warnings_;
    json runs = json::array();
    std::vector<double> base, corrected, counts;
    for (const auto& ws : workspaces_) {
      json run = {{"fold", ws.fold}};
      const json gdoc = load_artifact(ws.dir / "graph.json");
      const MapperGraph g = graph_from_json(gdoc);
      std::vector<char> covered(g.row_count, 0);
      for (const auto& n : g.nodes) {
        for (auto r : n.members) covered[r] = 1;
      }
      const auto n_covered = static_cast<double>(std::count(covered.begin(), covered.end(), 1));
      run["graph"] = {{"nodes", g.nodes.size()},
                      {"edges", g.edges.size()},
                      {"components", connected_components(g)},
                      {"coverage", g.row_count ? n_covered / static_cast<double>(g.row_count) : 0.0}};
      for (const auto& w : gdoc.value("warnings", json::array())) warnings.push_back(w.get<std::string>());

      if (fs::exists(ws.dir / "modes.json")) {
        json table = json::array();
        const auto modes = load_modes(ws);
        for (const auto& m : modes) {
          table.push_back({{"id", m.id},
                           {"size", m.size()},
                           {"accuracy", m.accuracy},
                           {"ground_truth_mode", m.ground_truth_mode},
                           {"provenance", to_string(m.provenance)}});
        }
        run["modes"] = table;
        counts.push_back(static_cast<double>(modes.size()));
      }
      if (fs::exists(ws.dir / "ensemble.json")) {
        const json edoc = load_artifact(ws.dir / "ensemble.json");
        for (const auto& w : edoc.value("warnings", json::array())) warnings.push_back(w.get<std::string>());
      }
      if (fs::exists(ws.dir / "evaluation.json")) {
        json ev = load_artifact(ws.dir / "evaluation.json").at("evaluation");
        base.push_back(ev.at("base_accuracy").get<double>());
        corrected.push_back(ev.at("corrected_accuracy").get<double>());
        run["evaluation"] = std::move(ev);
      }
      if (fs::exists(ws.dir / "diagnostics.json")) {
        json ks = json::array();
        const json diag = load_artifact(ws.dir / "diagnostics.json");
        for (const auto& r : diag.at("reports")) {
          json top = json::array();
          for (const auto& f : r.at("features")) top.push_back({{"name", f.at("name")}, {"ks", f.at("ks")}});
          ks.push_back({{"mode_id", r.at("mode_id")}, {"features", top}});
        }
        run["ks_top_features"] = ks;
      }
      runs.push_back(std::move(run));
    }
    json summary = {{"runs", workspaces_.size()}};
    if (!counts.empty()) summary["mean_failure_modes"] = mean_of(counts);
    if (!base.empty()) {
      summary["mean_base_accuracy"] = mean_of(base);
      summary["mean_corrected_accuracy"] = mean_of(corrected);
    }
    out.warnings = warnings;
    out.document = stamp({{"warnings", warnings}, {"runs", runs}, {"summary", summary}});
    write_json(config_.output / "report.json", out.document);
  });
  out.timing = timing_;
  json tdoc = json::array();
  for (const auto& t : timing_) tdoc.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  write_json(config_.output / "timing.json", stamp({{"stages", tdoc}}));
  return out;
}

RunReport Pipeline::run() {
  const auto stale = config_.output / kStaleFile;
  if (fs::exists(stale)) fs::remove(stale);
  timing_.clear();
  build_graph();
  extract();
  train();
  evaluate();
  diagnose();
  return report();
}

}  // namespace fifa
