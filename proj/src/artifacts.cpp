#include "fifa/artifacts.hpp"

#include <fstream>

#include "fifa/error.hpp"

namespace fifa {

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[h & 0xF];
    h >>= 4;
  }
  return out;
}

namespace {

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json counts_json(const std::map<long long, std::size_t>& counts) {
  json out = json::object();
  for (const auto& [label, n] : counts) out[std::to_string(label)] = n;
  return out;
}

std::map<long long, std::size_t> counts_from(const json& doc) {
  std::map<long long, std::size_t> out;
  for (const auto& [k, v] : doc.items()) out[std::stoll(k)] = v.get<std::size_t>();
  return out;
}

}  // namespace

json to_json(const NodeStats& s) {
  json flags = json::object();
  for (const auto& [name, mean] : s.flag_means) flags[name] = mean;
  return {{"size", s.size},
          {"error_measure_mean", s.error_mean},
          {"ground_truth_mean", s.ground_truth_mean},
          {"prediction_mean", s.prediction_mean},
          {"accuracy", s.accuracy},
          {"flag_means", flags}};
}

json to_json(const MapperGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    nodes.push_back({{"id", n.id},
                     {"address", n.address},
                     {"cluster", n.cluster},
                     {"members", n.members},
                     {"stats", to_json(n.stats)}});
  }
  json edges = json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"source", e.source}, {"target", e.target}, {"shared_count", e.shared_count}});
  }
  return {{"row_count", g.row_count}, {"nodes", nodes}, {"edges", edges}};
}

MapperGraph graph_from_json(const json& doc) {
  try {
    MapperGraph g;
    g.row_count = doc.at("row_count").get<std::size_t>();
    for (const auto& n : doc.at("nodes")) {
      MapperNode node;
      node.id = n.at("id").get<std::size_t>();
      node.address = n.at("address").get<Address>();
      node.cluster = n.at("cluster").get<std::size_t>();
      node.members = n.at("members").get<std::vector<std::size_t>>();
      const auto& s = n.at("stats");
      node.stats.size = s.at("size").get<std::size_t>();
      node.stats.error_mean = s.at("error_measure_mean").get<double>();
      node.stats.ground_truth_mean = s.at("ground_truth_mean").get<double>();
      node.stats.prediction_mean = s.at("prediction_mean").get<double>();
      node.stats.accuracy = s.at("accuracy").get<double>();
      node.stats.flag_means = s.at("flag_means").get<std::map<std::string, double>>();
      if (node.id != g.nodes.size()) throw InputError("graph node ids must be 0..V-1 in order");
      g.nodes.push_back(std::move(node));
    }
    for (const auto& e : doc.at("edges")) {
      g.edges.push_back({e.at("source").get<std::size_t>(), e.at("target").get<std::size_t>(),
                         e.at("shared_count").get<std::size_t>()});
    }
    return g;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed graph document: ") + e.what());
  }
}

json to_json(const FailureMode& m) {
  return {{"id", m.id},
          {"node_ids", m.node_ids},
          {"members", m.members},
          {"size", m.size()},
          {"ground_truth_mode", m.ground_truth_mode},
          {"accuracy", m.accuracy},
          {"error_measure_mean", m.error_mean},
          {"residual_mean", m.residual_mean},
          {"provenance", to_string(m.provenance)},
          {"ground_truth_counts", counts_json(m.ground_truth_counts)},
          {"prediction_counts", counts_json(m.prediction_counts)},
          {"warnings", m.warnings}};
}

FailureMode failure_mode_from_json(const json& doc) {
  try {
    FailureMode m;
    m.id = doc.at("id").get<std::size_t>();
    m.node_ids = doc.at("node_ids").get<std::vector<std::size_t>>();
    m.members = doc.at("members").get<std::vector<std::size_t>>();
    m.ground_truth_mode = doc.at("ground_truth_mode").get<double>();
    m.accuracy = doc.at("accuracy").get<double>();
    m.error_mean = doc.at("error_measure_mean").get<double>();
    m.residual_mean = doc.at("residual_mean").get<double>();
    m.provenance = parse_provenance(doc.at("provenance").get<std::string>());
    m.ground_truth_counts = counts_from(doc.at("ground_truth_counts"));
    m.prediction_counts = counts_from(doc.at("prediction_counts"));
    m.warnings = doc.value("warnings", std::vector<std::string>{});
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed failure-mode document: ") + e.what());
  }
}

json to_json(const CorrectionEnsemble& e) {
  json members = json::array();
  for (const auto& m : e.members) {
    json model;
    if (const auto* lm = std::get_if<LinearModel>(&m.classifier.model())) {
      model = {{"type", to_string(lm->kind)},
               {"weights", lm->weights},
               {"intercept", lm->intercept},
               {"C", lm->C},
               {"iterations", lm->iterations},
               {"gradient_norm", lm->gradient_norm},
               {"converged", lm->converged}};
    } else {
      const auto& nb = std::get<GaussianNB>(m.classifier.model());
      model = {{"type", "gaussian_nb"},
               {"prior", nb.prior},
               {"mean", nb.mean},
               {"variance", nb.variance}};
    }
    members.push_back({{"mode_id", m.mode_id},
                       {"training_size", m.training_size},
                       {"action",
                        {{"kind", m.action.kind == ActionKind::label_override ? "label_override" : "offset"},
                         {"value", m.action.value}}},
                       {"model", model}});
  }
  return {{"task", to_string(e.task)},
          {"classifier", to_string(e.kind)},
          {"feature_names", e.feature_names},
          {"standardization", {{"center", e.center}, {"scale", e.scale}}},
          {"tie_policy", e.tie_policy},
          {"warnings", e.warnings},
          {"members", members}};
}

CorrectionEnsemble ensemble_from_json(const json& doc) {
  try {
    CorrectionEnsemble e;
    e.task = parse_task_kind(doc.at("task").get<std::string>());
    e.kind = parse_classifier_kind(doc.at("classifier").get<std::string>());
    e.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    e.center = doc.at("standardization").at("center").get<std::vector<double>>();
    e.scale = doc.at("standardization").at("scale").get<std::vector<double>>();
    e.tie_policy = doc.at("tie_policy").get<std::string>();
    e.warnings = doc.value("warnings", std::vector<std::string>{});
    for (const auto& m : doc.at("members")) {
      EnsembleMember member;
      member.mode_id = m.at("mode_id").get<std::size_t>();
      member.training_size = m.at("training_size").get<std::size_t>();
      const auto& a = m.at("action");
      member.action.kind = a.at("kind").get<std::string>() == "offset" ? ActionKind::offset : ActionKind::label_override;
      member.action.value = a.at("value").get<double>();
      const auto& model = m.at("model");
      if (model.at("type").get<std::string>() == "gaussian_nb") {
        GaussianNB nb;
        nb.prior = model.at("prior").get<std::array<double, 2>>();
        nb.mean = model.at("mean").get<std::array<std::vector<double>, 2>>();
        nb.variance = model.at("variance").get<std::array<std::vector<double>, 2>>();
        member.classifier = Classifier(std::move(nb));
      } else {
        LinearModel lm;
        lm.kind = parse_classifier_kind(model.at("type").get<std::string>());
        lm.weights = model.at("weights").get<std::vector<double>>();
        lm.intercept = model.at("intercept").get<double>();
        lm.C = model.at("C").get<double>();
        lm.iterations = model.at("iterations").get<std::size_t>();
        lm.gradient_norm = model.at("gradient_norm").get<double>();
        lm.converged = model.at("converged").get<bool>();
        member.classifier = Classifier(std::move(lm));
      }
      e.members.push_back(std::move(member));
    }
    return e;
  } catch (const json::exception& ex) {
    throw InputError(std::string("malformed ensemble document: ") + ex.what());
  }
}

json to_json(const BiasProfile& b) {
  return {{"mode_id", b.mode_id},
          {"captured", b.captured},
          {"ground_truth_counts", counts_json(b.ground_truth_counts)},
          {"purity", optional_json(b.purity)},
          {"clean_fraction", optional_json(b.clean_fraction)},
          {"residual_mean", optional_json(b.residual_mean)},
          {"residual_sd", optional_json(b.residual_sd)}};
}

json to_json(const EnsembleEvaluation& e) {
  json captures = json::object();
  for (const auto& [mode, n] : e.captures) captures[std::to_string(mode)] = n;
  return {{"rows", e.rows},
          {"base_accuracy", e.base_accuracy},
          {"corrected_accuracy", e.corrected_accuracy},
          {"corrected_count", e.corrected_count},
          {"clean_fraction", optional_json(e.clean_fraction)},
          {"captures", captures},
          {"base_rmse", optional_json(e.base_rmse)},
          {"corrected_rmse", optional_json(e.corrected_rmse)}};
}

json to_json(const KSReport& r) {
  json features = json::array();
  for (const auto& f : r.features) {
    features.push_back({{"feature", f.feature}, {"name", f.name}, {"ks", f.statistic}});
  }
  return {{"group", r.group}, {"reference", r.reference}, {"features", features}};
}

void write_json(const std::filesystem::path& path, const json& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace fifa
