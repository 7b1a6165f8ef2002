#include "ccn/gateway.hpp"

#include "httplib.h"

#include "ccn/errors.hpp"

namespace ccn {
namespace {

// Request problems that map to a specific HTTP status.
struct RequestError {
  int status;
  std::string message;
};

HttpReply error_reply(int status, const std::string& message) {
  return {status, json{{"error", message}}};
}

const json& require(const json& body, const char* key) {
  if (!body.contains(key)) throw RequestError{400, std::string("missing field '") + key + "'"};
  return body.at(key);
}

DependentState parse_state(const json& j) {
  if (!j.is_object()) throw RequestError{400, "dependent_state must be an object"};
  const auto& v = require(j, "vulnerability");
  if (!v.is_number()) throw RequestError{400, "vulnerability must be a number"};
  for (const char* key : {"goals", "boundaries", "preferences", "commitments", "stress_context"}) {
    if (j.contains(key) && !j.at(key).is_string()) {
      throw RequestError{400, std::string("dependent_state.") + key + " must be a string"};
    }
  }
  DependentState s = j.get<DependentState>();
  try {
    validate(s);
  } catch (const OutOfRange& e) {
    throw RequestError{422, e.what()};
  }
  return s;
}

DialogueContext parse_context(const json& body) {
  DialogueContext ctx;
  if (body.contains("memory_facts")) {
    const auto& facts = body.at("memory_facts");
    if (!facts.is_array()) throw RequestError{400, "memory_facts must be an array"};
    for (const auto& f : facts) {
      if (!f.is_string()) throw RequestError{400, "memory_facts entries must be strings"};
      ctx.memory_facts.push_back(f.get<std::string>());
    }
  }
  const auto& dialogue = require(body, "dialogue");
  if (!dialogue.is_array() || dialogue.empty()) {
    throw RequestError{400, "dialogue must be a non-empty array"};
  }
  for (const auto& t : dialogue) {
    if (!t.is_object() || !t.contains("role") || !t.contains("text") ||
        !t.at("role").is_string() || !t.at("text").is_string()) {
      throw RequestError{400, "dialogue turns need string role and text"};
    }
    try {
      ctx.turns.push_back(t.get<DialogueTurn>());
    } catch (const InvalidArgument& e) {
      throw RequestError{400, e.what()};
    }
  }
  try {
    validate_for_generation(ctx);
  } catch (const InvalidArgument& e) {
    throw RequestError{400, e.what()};
  }
  return ctx;
}

json response_body(const std::string& session_id, const PipelineResult& r) {
  const auto& t = r.trace;
  json candidates = json::array();
  for (const auto& c : t.candidates) candidates.push_back(c);
  json feasible = json::array();
  for (auto label : t.feasible_labels) feasible.push_back(to_string(label));
  json failures = json::array();
  for (const auto& f : r.failures) {
    failures.push_back({{"label", to_string(f.label)},
                        {"kind", f.kind},
                        {"message", f.message},
                        {"retries", f.retries}});
  }
  return json{{"session_id", session_id},
              {"response_text", r.response_text()},
              {"care_signal", t.care_signal},
              {"kappa", t.kappa},
              {"candidates", candidates},
              {"feasible_labels", feasible},
              {"chosen_label", to_string(t.chosen_label)},
              {"constraint_relaxed", t.constraint_relaxed},
              {"memory",
               {{"slot_written", r.memory_slot_written},
                {"occupied_slots", r.memory_occupied},
                {"retrieval_weights", r.memory.weights},
                {"retrieval_slots", r.memory.slot_indices}}},
              {"failures", failures}};
}

}  // namespace

SessionStore::SessionStore(int slots, int dim, std::chrono::seconds ttl)
    : slots_(slots), dim_(dim), ttl_(ttl) {}

std::shared_ptr<Session> SessionStore::acquire(const std::string& session_id) {
  const auto now = Session::Clock::now();
  std::lock_guard lock(mutex_);
  std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->last_used > ttl_; });
  auto& slot = sessions_[session_id];
  if (!slot) slot = std::make_shared<Session>(MemoryBank(slots_, dim_));
  slot->last_used = now;
  return slot;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

void SessionStore::evict_idle(Session::Clock::time_point now) {
  std::lock_guard lock(mutex_);
  std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->last_used > ttl_; });
}

json SessionStore::snapshot() const {
  std::lock_guard lock(mutex_);
  json sessions = json::object();
  for (const auto& [id, session] : sessions_) {
    std::lock_guard session_lock(session->mutex);
    sessions[id] = session->bank.to_json();
  }
  return json{{"sessions", sessions}};
}

void SessionStore::restore(const json& j) {
  std::map<std::string, std::shared_ptr<Session>> restored;
  try {
    for (const auto& [id, bank_json] : j.at("sessions").items()) {
      auto bank = MemoryBank::from_json(bank_json);
      if (bank.slot_count() != slots_ || bank.dim() != dim_) {
        throw DimensionMismatch("snapshot bank for '" + id + "' has the wrong shape");
      }
      restored.emplace(id, std::make_shared<Session>(std::move(bank)));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed session snapshot: ") + e.what());
  }
  std::lock_guard lock(mutex_);
  sessions_ = std::move(restored);
}

Gateway::Gateway(std::shared_ptr<const Pipeline> pipeline, bool controller_loaded,
                 GatewayOptions options)
    : pipeline_(std::move(pipeline)),
      controller_loaded_(controller_loaded),
      options_(std::move(options)),
      sessions_(pipeline_ ? pipeline_->config().memory_slots : 1,
                pipeline_ ? pipeline_->config().embed_dim : 1, options_.session_ttl),
      server_(std::make_unique<httplib::Server>()) {
  if (!pipeline_) throw InvalidArgument("gateway requires a pipeline");
  if (!options_.snapshot_path.empty() && std::filesystem::exists(options_.snapshot_path)) {
    sessions_.restore(read_json_file(options_.snapshot_path));
  }

  server_->Post("/v1/ccn/respond", [this](const httplib::Request& req, httplib::Response& res) {
    const auto reply = respond(req.body);
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  });
  server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    const auto reply = healthz();
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  });
}

Gateway::~Gateway() { stop(); }

HttpReply Gateway::respond(const std::string& body_text) {
  try {
    const json body = json::parse(body_text, nullptr, /*allow_exceptions=*/false);
    if (body.is_discarded() || !body.is_object()) {
      return error_reply(400, "body must be a JSON object");
    }
    const auto& sid = require(body, "session_id");
    if (!sid.is_string() || sid.get<std::string>().empty()) {
      return error_reply(400, "session_id must be a non-empty string");
    }
    const std::string session_id = sid.get<std::string>();
    const DependentState state = parse_state(require(body, "dependent_state"));
    const DialogueContext ctx = parse_context(body);

    std::optional<PipelineConfig> overrides;
    if (body.contains("config_overrides") && !body.at("config_overrides").is_null()) {
      const auto& o = body.at("config_overrides");
      if (!o.is_object()) throw RequestError{400, "config_overrides must be an object"};
      PipelineConfig cfg = pipeline_->config();
      try {
        from_json(o, cfg);
        validate(cfg);
      } catch (const std::exception& e) {
        throw RequestError{400, std::string("invalid config_overrides: ") + e.what()};
      }
      if (cfg.memory_slots != pipeline_->config().memory_slots ||
          cfg.embed_dim != pipeline_->config().embed_dim) {
        throw RequestError{400, "memory_slots and embed_dim cannot be overridden per request"};
      }
      overrides = std::move(cfg);
    }
    std::optional<std::uint64_t> seed;
    if (body.contains("seed") && !body.at("seed").is_null()) {
      if (!body.at("seed").is_number_unsigned()) {
        throw RequestError{400, "seed must be a non-negative integer"};
      }
      seed = body.at("seed").get<std::uint64_t>();
    }

    auto session = sessions_.acquire(session_id);
    std::lock_guard lock(session->mutex);
    const auto result = pipeline_->respond(state, ctx, session->bank, seed, CandidateSet::full,
                                           overrides ? &*overrides : nullptr);
    return {200, response_body(session_id, result)};
  } catch (const RequestError& e) {
    return error_reply(e.status, e.message);
  } catch (const BackendError& e) {
    return {502, json{{"error", e.what()}, {"kind", to_string(e.kind())}}};
  } catch (const OutOfRange& e) {
    return error_reply(422, e.what());
  } catch (const InvalidArgument& e) {
    return error_reply(400, e.what());
  } catch (const json::exception& e) {
    return error_reply(400, e.what());
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

HttpReply Gateway::healthz() {
  bool reachable = false;
  try {
    reachable = pipeline_->backend().reachable();
  } catch (const std::exception&) {
    reachable = false;
  }
  return {200, json{{"status", "ok"},
                    {"backend_reachable", reachable},
                    {"controller_loaded", controller_loaded_},
                    {"backend", pipeline_->backend().name()},
                    {"sessions", sessions_.size()}}};
}

int Gateway::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound <= 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void Gateway::serve() { server_->listen_after_bind(); }

void Gateway::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void Gateway::save_snapshot() const {
  if (options_.snapshot_path.empty()) return;
  write_json_file(options_.snapshot_path, sessions_.snapshot());
}

}  // namespace ccn
