#include "fifa/service.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>

#include "httplib.h"

#include "fifa/error.hpp"

namespace fifa {

namespace fs = std::filesystem;

namespace {

constexpr const char* kArtifacts[] = {"graph.json",      "modes.json",       "ensemble.json",
                                      "evaluation.json", "diagnostics.json", kSelectionsFile};

Response error(int status, std::string message) { return {status, {{"error", std::move(message)}}}; }

std::optional<std::size_t> parse_index(std::string_view text) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return v;
}

std::map<std::string, std::string> parse_query(std::string_view q) {
  std::map<std::string, std::string> out;
  while (!q.empty()) {
    const auto amp = q.find('&');
    const auto part = q.substr(0, amp);
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) {
      out[std::string(part)] = "";
    } else {
      out[std::string(part.substr(0, eq))] = std::string(part.substr(eq + 1));
    }
    if (amp == std::string_view::npos) break;
    q.remove_prefix(amp + 1);
  }
  return out;
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> out;
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const auto slash = path.find('/');
    out.push_back(path.substr(0, slash));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash);
  }
  return out;
}

}  // namespace

Service::Service(const Pipeline& pipeline, fs::path dir)
    : pipeline_(pipeline), ws_(pipeline.workspace_for(dir)), dir_(std::move(dir)) {
  for (const auto& stale : {dir_ / kStaleFile, pipeline.config().output / kStaleFile}) {
    if (fs::exists(stale)) {
      const json doc = read_json(stale);
      throw InputError("artifacts are stale: stage '" + doc.value("stage", std::string{"?"}) +
                       "' failed; rerun the pipeline before serving");
    }
  }
  for (const char* required : {"graph.json", "modes.json"}) {
    if (!fs::exists(dir_ / required)) throw InputError("missing artifact '" + (dir_ / required).string() + "'");
  }
  for (const char* name : kArtifacts) {
    if (fs::exists(dir_ / name)) pipeline.load_artifact(dir_ / name);
  }
  for (const auto& report : {dir_ / "report.json", dir_.parent_path() / "report.json"}) {
    if (fs::exists(report)) {
      pipeline.load_artifact(report);
      break;
    }
  }
  graph_ = graph_from_json(read_json(dir_ / "graph.json"));
}

Response Service::file(const fs::path& path) const {
  if (!fs::exists(path)) return error(404, "no artifact '" + path.filename().string() + "'");
  return {200, read_json(path)};
}

Response Service::graph() const { return file(dir_ / "graph.json"); }

Response Service::report() const {
  if (fs::exists(dir_ / "report.json")) return file(dir_ / "report.json");
  return file(dir_.parent_path() / "report.json");
}

Response Service::diagnostics() const { return file(dir_ / "diagnostics.json"); }

Response Service::modes() const {
  json list = json::array();
  for (const auto& m : pipeline_.load_modes(ws_)) list.push_back(to_json(m));
  return {200, {{"config_hash", pipeline_.config_hash()}, {"modes", list}}};
}

Response Service::node_members(std::size_t id) const {
  if (id >= graph_.nodes.size()) return error(404, "unknown node id " + std::to_string(id));
  const auto& members = graph_.nodes[id].members;
  std::vector<std::size_t> source;
  source.reserve(members.size());
  for (auto r : members) source.push_back(ws_.train_rows[r]);
  return {200, {{"id", id}, {"members", members}, {"source_rows", source}}};
}

Response Service::mode_ks(std::size_t mode_id, std::string_view reference, std::size_t top) const {
  const auto modes = pipeline_.load_modes(ws_);
  const auto find = [&](std::size_t id) -> const FailureMode* {
    for (const auto& m : modes) {
      if (m.id == id) return &m;
    }
    return nullptr;
  };
  const FailureMode* mode = find(mode_id);
  if (!mode) return error(404, "unknown mode id " + std::to_string(mode_id));
  if (top == 0) return error(400, "top must be >= 1");

  std::vector<std::size_t> ref;
  if (reference == "rest" || reference == "all") {
    for (std::size_t r = 0; r < ws_.train.rows(); ++r) {
      if (reference == "all" || !std::binary_search(mode->members.begin(), mode->members.end(), r)) ref.push_back(r);
    }
  } else if (const auto other = parse_index(reference)) {
    const FailureMode* m = find(*other);
    if (!m) return error(404, "unknown reference mode id " + std::to_string(*other));
    ref = m->members;
  } else {
    return error(400, "reference must be 'rest', 'all' or a mode id");
  }
  if (ref.empty()) return error(400, "reference group is empty");
  KSReport rep = rank_features(mode->members, ref, ws_.train, top);
  rep.group = "mode " + std::to_string(mode_id);
  rep.reference = std::string(reference);
  return {200, to_json(rep)};
}

Response Service::submit_selection(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    return error(400, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("node_ids") || !doc.at("node_ids").is_array()) {
    return error(400, "expected an object with a 'node_ids' array");
  }
  std::vector<std::size_t> ids;
  for (const auto& v : doc.at("node_ids")) {
    if (!v.is_number_unsigned()) return error(400, "node ids must be non-negative integers");
    ids.push_back(v.get<std::size_t>());
  }

  std::lock_guard lock(write_mutex_);
  FailureMode mode;
  try {
    mode = manual_select(graph_, ids, ws_.train, pipeline_.config().extraction);
  } catch (const SelectionError& e) {
    return error(400, e.what());
  }
  const auto existing = pipeline_.load_modes(ws_);
  std::size_t next = 0;
  for (const auto& m : existing) next = std::max(next, m.id + 1);
  mode.id = next;
  mode.provenance = Provenance::manual;

  const fs::path path = dir_ / kSelectionsFile;
  json stored = fs::exists(path) ? pipeline_.load_artifact(path)
                                 : json{{"config_hash", pipeline_.config_hash()}, {"modes", json::array()}};
  stored["modes"].push_back(to_json(mode));
  const fs::path tmp = path.string() + ".tmp";
  write_json(tmp, stored);
  fs::rename(tmp, path);
  return {201, to_json(mode)};
}

Response Service::handle(std::string_view method, std::string_view target, std::string_view body) {
  const auto qpos = target.find('?');
  const auto path = split_path(target.substr(0, qpos));
  const auto query = qpos == std::string_view::npos ? std::map<std::string, std::string>{}
                                                    : parse_query(target.substr(qpos + 1));
  if (path.size() < 2 || path[0] != "api") return error(404, "not found");
  const bool get = method == "GET";
  const bool post = method == "POST";
  try {
    if (path.size() == 2) {
      if (path[1] == "selections") return post ? submit_selection(body) : error(405, "use POST");
      if (!get) return error(405, "use GET");
      if (path[1] == "graph") return graph();
      if (path[1] == "report") return report();
      if (path[1] == "modes") return modes();
      if (path[1] == "diagnostics") return diagnostics();
    }
    if (path.size() == 4 && path[1] == "node" && path[3] == "members") {
      if (!get) return error(405, "use GET");
      const auto id = parse_index(path[2]);
      if (!id) return error(400, "node id must be a non-negative integer");
      return node_members(*id);
    }
    if (path.size() == 4 && path[1] == "modes" && path[3] == "ks") {
      if (!get) return error(405, "use GET");
      const auto id = parse_index(path[2]);
      if (!id) return error(400, "mode id must be a non-negative integer");
      const auto ref = query.count("reference") ? query.at("reference") : std::string("rest");
      std::size_t top = pipeline_.config().top_n;
      if (query.count("top")) {
        const auto t = parse_index(query.at("top"));
        if (!t) return error(400, "top must be a positive integer");
        top = *t;
      }
      return mode_ks(*id, ref, top);
    }
  } catch (const Error& e) {
    return error(500, e.what());
  }
  return error(404, "not found");
}

void serve(Service& service, const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ArgumentError("--bind expects host:port, got '" + bind + "'");
  const std::string host = bind.substr(0, colon);
  const auto port = parse_index(std::string_view(bind).substr(colon + 1));
  if (!port || *port > 65535) throw ArgumentError("invalid port in '" + bind + "'");

  httplib::Server server;
  const auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    const Response r = service.handle(req.method, req.target, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
  if (!server.listen(host, static_cast<int>(*port))) throw InputError("cannot listen on " + bind);
}

}  // namespace fifa
