#pragma once

// Generation backends: a chat-completions HTTP client and a seeded mock.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccn/errors.hpp"
#include "ccn/types.hpp"

namespace ccn {

struct BackendConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string api_key;
  std::string model_name = "local-model";
  int timeout_ms = 30000;
  int max_tokens = 256;
  int max_retries = 2;
  int backoff_ms = 250;

  // CCN_BACKEND_URL, CCN_BACKEND_API_KEY, CCN_BACKEND_MODEL.
  void apply_env();
  void validate() const;
};

struct GenerationRequest {
  std::string prompt;
  DecodingParams params;
  std::optional<std::uint64_t> seed;
};

struct GenerationResult {
  std::string text;
  double latency_ms = 0.0;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
  int retries = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Throws BackendError.
  virtual GenerationResult generate(const GenerationRequest& request) = 0;
  virtual bool reachable() = 0;
  virtual std::string name() const = 0;
};

/// Deterministic offline responder. Output depends only on (prompt, decoding
/// params, seed): the temperature / top-p bucket shifts which stances
/// (option-offering, reassurance, pressure, ...) the response is built from.
class MockBackend final : public Backend {
 public:
  GenerationResult generate(const GenerationRequest& request) override;
  bool reachable() override { return true; }
  std::string name() const override { return "mock"; }
};

/// OpenAI-style POST {base_url}/chat/completions.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendConfig config);

  GenerationResult generate(const GenerationRequest& request) override;
  bool reachable() override;
  std::string name() const override { return "http"; }

  const BackendConfig& config() const { return config_; }

 private:
  BackendConfig config_;
  std::string origin_;       // scheme://host[:port]
  std::string path_prefix_;  // e.g. /v1
};

std::shared_ptr<Backend> make_backend(std::string_view kind, const BackendConfig& config);

// Splits "http://host:port/prefix" into origin and path prefix.
std::pair<std::string, std::string> split_base_url(std::string_view url);

struct GenerationOutcome {
  PlanEntry entry;
  std::optional<GenerationResult> result;
  std::optional<BackendError> error;

  bool ok() const { return result.has_value(); }
};

// Per-candidate seed so each plan entry is reproducible regardless of which
// other entries are requested or in which order they complete.
std::uint64_t candidate_seed(std::uint64_t request_seed, CandidateLabel label);

/// One generation per plan entry, in plan order, with at most max_in_flight
/// concurrent requests. A failing entry yields an error slot; throws
/// BackendError(all_failed) only when every entry failed.
std::vector<GenerationOutcome> generate_all(Backend& backend, const std::string& prompt,
                                            std::span<const PlanEntry> plan,
                                            std::optional<std::uint64_t> seed,
                                            int max_in_flight = 5);

}  // namespace ccn
