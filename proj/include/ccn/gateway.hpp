#pragma once

// HTTP front end with per-session memory banks.
//
//   POST /v1/ccn/respond  one pipeline turn for a session
//   GET  /healthz         {status, backend_reachable, controller_loaded}

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "ccn/json_io.hpp"
#include "ccn/memory_bank.hpp"
#include "ccn/pipeline.hpp"

namespace httplib {
class Server;
}

namespace ccn {

struct Session {
  using Clock = std::chrono::steady_clock;

  explicit Session(MemoryBank bank) : bank(std::move(bank)) {}

  std::mutex mutex;  // one request at a time per session
  MemoryBank bank;
  Clock::time_point created_at = Clock::now();
  Clock::time_point last_used = created_at;
};

class SessionStore {
 public:
  SessionStore(int slots, int dim, std::chrono::seconds ttl);

  // Also refreshes last_used and evicts sessions idle longer than the TTL.
  std::shared_ptr<Session> acquire(const std::string& session_id);
  std::size_t size() const;
  void evict_idle(Session::Clock::time_point now);

  // {"sessions": {id: bank}}.
  json snapshot() const;
  void restore(const json& j);

 private:
  int slots_;
  int dim_;
  std::chrono::seconds ttl_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

struct HttpReply {
  int status = 200;
  json body;
};

struct GatewayOptions {
  std::chrono::seconds session_ttl{3600};
  std::filesystem::path snapshot_path;  // empty: no snapshot
};

class Gateway {
 public:
  Gateway(std::shared_ptr<const Pipeline> pipeline, bool controller_loaded,
          GatewayOptions options = {});
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Transport-free handlers (also used by the HTTP routes).
  HttpReply respond(const std::string& body);
  HttpReply healthz();

  // Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop(). Requires bind().
  void serve();
  void stop();
  // Writes the session snapshot when a snapshot path is configured.
  void save_snapshot() const;

  SessionStore& sessions() { return sessions_; }

 private:
  std::shared_ptr<const Pipeline> pipeline_;
  bool controller_loaded_;
  GatewayOptions options_;
  SessionStore sessions_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace ccn
