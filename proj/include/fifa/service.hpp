#pragma once

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>

#include "fifa/pipeline.hpp"

namespace fifa {

struct Response {
  int status = 200;
  json body;
};

/// Read-mostly view of one artifact directory plus the selection endpoint.
/// Startup checks that graph.json and modes.json exist, that every artifact
/// carries the current config hash, and that no stage left stale.json behind;
/// violations throw InputError.
class Service {
 public:
  Service(const Pipeline& pipeline, std::filesystem::path dir);

  Response graph() const;
  Response report() const;
  Response modes() const;
  Response node_members(std::size_t id) const;
  Response diagnostics() const;
  Response mode_ks(std::size_t mode_id, std::string_view reference, std::size_t top) const;
  /// Body {"node_ids": [...]}; on success persists a manual mode into
  /// selections.json and answers 201 with it.
  Response submit_selection(std::string_view body);

  /// Routes a request. Unknown paths answer 404.
  Response handle(std::string_view method, std::string_view target, std::string_view body);

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  Response file(const std::filesystem::path& path) const;

  const Pipeline& pipeline_;
  const Workspace& ws_;
  std::filesystem::path dir_;
  MapperGraph graph_;
  mutable std::mutex write_mutex_;
};

/// Blocks serving `service` on `bind` ("host:port").
void serve(Service& service, const std::string& bind);

}  // namespace fifa
