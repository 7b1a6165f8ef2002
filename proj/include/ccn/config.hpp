#pragma once

// Service / run configuration file and component wiring.
//
// File layout (all keys optional):
//   {"pipeline": PipelineConfig, "backend": {"kind": "mock"|"http", ...},
//    "evaluator": EvaluatorBinding, "controller_path": "...",
//    "encoder_seed": 42, "encoder_path": "...", "controller_seed": 0,
//    "listen_addr": "127.0.0.1:8080", "session_ttl_seconds": 3600,
//    "snapshot_path": "..."}

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>

#include "ccn/backend.hpp"
#include "ccn/care_controller.hpp"
#include "ccn/evaluators.hpp"
#include "ccn/json_io.hpp"
#include "ccn/pipeline.hpp"
#include "ccn/state_encoder.hpp"
#include "ccn/types.hpp"

namespace ccn {

struct ServiceConfig {
  PipelineConfig pipeline;
  std::string backend_kind = "mock";
  BackendConfig backend;
  EvaluatorBinding evaluator;
  std::string controller_path;  // empty: untrained seeded controller
  std::uint64_t controller_seed = 0;
  std::string encoder_path;  // empty: seeded encoder
  std::uint64_t encoder_seed = 42;
  std::string listen_addr = "127.0.0.1:8080";
  int session_ttl_seconds = 3600;
  std::string snapshot_path;
};

ServiceConfig service_config_from_json(const json& j);
// Throws DataError when the file is missing or malformed.
ServiceConfig load_service_config(const std::filesystem::path& path);
// CCN_LISTEN_ADDR plus the backend variables.
void apply_env(ServiceConfig& config);

// "host:port" -> (host, port). Throws InvalidArgument.
std::pair<std::string, int> parse_listen_addr(const std::string& addr);

struct Components {
  std::shared_ptr<Pipeline> pipeline;
  bool controller_loaded = false;  // parameters came from a file
};

/// Builds backend, evaluator, encoder and controller from the config.
Components build_components(const ServiceConfig& config);

}  // namespace ccn
