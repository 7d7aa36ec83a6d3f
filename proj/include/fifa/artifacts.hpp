#pragma once

// JSON documents persisted by the pipeline. Every artifact carries the hash
// of the configuration that produced it under "config_hash".

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fifa/correction.hpp"
#include "fifa/failure_modes.hpp"
#include "fifa/mapper.hpp"

namespace fifa {

using json = nlohmann::json;

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

json to_json(const NodeStats& s);
json to_json(const MapperGraph& g);
MapperGraph graph_from_json(const json& doc);

json to_json(const FailureMode& m);
FailureMode failure_mode_from_json(const json& doc);

json to_json(const CorrectionEnsemble& e);
CorrectionEnsemble ensemble_from_json(const json& doc);

json to_json(const BiasProfile& b);
json to_json(const EnsembleEvaluation& e);
json to_json(const KSReport& r);

/// Writes `doc` pretty-printed with a trailing newline, creating parent
/// directories as needed.
void write_json(const std::filesystem::path& path, const json& doc);
json read_json(const std::filesystem::path& path);

}  // namespace fifa
