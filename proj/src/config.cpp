#include "ccn/config.hpp"

#include <cstdlib>

#include "ccn/errors.hpp"

namespace ccn {

ServiceConfig service_config_from_json(const json& j) {
  if (!j.is_object()) throw DataError("config must be a JSON object");
  ServiceConfig c;
  try {
    if (j.contains("pipeline")) from_json(j.at("pipeline"), c.pipeline);
    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      c.backend_kind = b.value("kind", c.backend_kind);
      c.backend.base_url = b.value("base_url", c.backend.base_url);
      c.backend.api_key = b.value("api_key", c.backend.api_key);
      c.backend.model_name = b.value("model_name", c.backend.model_name);
      c.backend.timeout_ms = b.value("timeout_ms", c.backend.timeout_ms);
      c.backend.max_tokens = b.value("max_tokens", c.backend.max_tokens);
      c.backend.max_retries = b.value("max_retries", c.backend.max_retries);
      c.backend.backoff_ms = b.value("backoff_ms", c.backend.backoff_ms);
    }
    if (j.contains("evaluator")) c.evaluator = binding_from_json(j.at("evaluator"));
    c.controller_path = j.value("controller_path", c.controller_path);
    c.controller_seed = j.value("controller_seed", c.controller_seed);
    c.encoder_path = j.value("encoder_path", c.encoder_path);
    c.encoder_seed = j.value("encoder_seed", c.encoder_seed);
    c.listen_addr = j.value("listen_addr", c.listen_addr);
    c.session_ttl_seconds = j.value("session_ttl_seconds", c.session_ttl_seconds);
    c.snapshot_path = j.value("snapshot_path", c.snapshot_path);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed config: ") + e.what());
  }
  validate(c.pipeline);
  if (c.session_ttl_seconds <= 0) throw InvalidArgument("session_ttl_seconds must be > 0");
  return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  return service_config_from_json(read_json_file(path));
}

void apply_env(ServiceConfig& config) {
  config.backend.apply_env();
  if (const char* v = std::getenv("CCN_LISTEN_ADDR"); v && *v) config.listen_addr = v;
}

std::pair<std::string, int> parse_listen_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size()) {
    throw InvalidArgument("listen address must be host:port, got '" + addr + "'");
  }
  const std::string host = addr.substr(0, colon);
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1) throw InvalidArgument("trailing characters");
  } catch (const std::exception&) {
    throw InvalidArgument("invalid port in '" + addr + "'");
  }
  if (port < 0 || port > 65535) throw InvalidArgument("port out of range in '" + addr + "'");
  return {host, port};
}

Components build_components(const ServiceConfig& config) {
  config.backend.validate();
  auto backend = make_backend(config.backend_kind, config.backend);
  auto evaluator = make_evaluator(config.evaluator);
  const int dim = config.pipeline.embed_dim;
  auto encoder = std::make_shared<const StateEncoder>(
      config.encoder_path.empty() ? StateEncoder::seeded(dim, config.encoder_seed)
                                  : StateEncoder::load(config.encoder_path, dim));

  Components out;
  std::shared_ptr<const CareController> controller;
  if (!config.controller_path.empty()) {
    auto loaded = CareController::load(config.controller_path, encoder);
    if (loaded.variant() != config.pipeline.care_variant) {
      throw DataError(std::string("controller file holds variant '") +
                      to_string(loaded.variant()) + "' but the config selects '" +
                      to_string(config.pipeline.care_variant) + "'");
    }
    controller = std::make_shared<const CareController>(std::move(loaded));
    out.controller_loaded = true;
  } else if (config.pipeline.care_variant == CareVariant::token_regressor) {
    controller = std::make_shared<const CareController>(CareController::token_regressor(
        RegressorParams::init(RegressorDims{}, config.controller_seed), false));
  } else {
    controller = std::make_shared<const CareController>(
        CareController::fusion(FusionParams::init(dim, dim, config.controller_seed), encoder));
  }
  out.pipeline = std::make_shared<Pipeline>(config.pipeline, std::move(backend),
                                            std::move(evaluator), std::move(controller),
                                            std::move(encoder));
  return out;
}

}  // namespace ccn
