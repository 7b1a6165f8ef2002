#include "ccn/backend.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "ccn/hashing.hpp"
#include "ccn/json_io.hpp"
#include "ccn/rng.hpp"

// After Eigen: resolv.h (pulled in by httplib) defines a _res macro.
#include "httplib.h"

namespace ccn {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// ---- mock responder -------------------------------------------------------

constexpr std::array kOpeners = {
    "That sounds really hard.",
    "I hear you.",
    "It makes sense that you feel this way.",
    "Thank you for sharing this with me.",
    "That's a lot to carry.",
    "Okay, let's think about this.",
};

constexpr std::array kAutonomy = {
    "One option is to {goal_step}. Another option is to pause and decide later. It's your decision.",
    "You could try one small step today and see how it feels. What feels right to you?",
    "You know yourself best, so trust your own judgment here.",
    "If you want, we can list a few options, and you get to decide which one fits.",
    "It's your call how to handle this, at your own pace.",
    "What do you think would help most today?",
};

constexpr std::array kDependency = {
    "I'm always here for you, so just come back to me whenever you feel unsure.",
    "Don't worry about it, I've got you.",
    "You don't need anyone else; just ask me and I'll tell you what to do.",
    "Let me handle the planning for you, and check with me before every decision.",
    "Everything will be fine, I promise.",
};

constexpr std::array kCoercion = {
    "You must deal with this right now, or else it will only get worse.",
    "If you don't change this today, you'll regret it.",
    "You have to push through, no excuses.",
    "Honestly, you should be ashamed of letting it slide this far.",
    "You need to stop this immediately.",
};

constexpr std::array kNeutral = {
    "It might help to take this one step at a time.",
    "Getting some rest could make tomorrow easier.",
    "Writing down what is on your mind can make it feel more manageable.",
    "Small, steady progress usually adds up.",
};

constexpr std::array kClosers = {
    "It could also help to talk it through with someone you trust.",
    "Whatever you choose, I'm rooting for you.",
    "Be gentle with yourself as you figure this out.",
};

struct StanceMix {
  double opener, autonomy, dependency, coercion, neutral, boundary, closer;
};

// Rows: temperature buckets <0.4, <0.7, <0.95, >=0.95.
constexpr std::array<StanceMix, 4> kMixByTemperature = {{
    {0.70, 0.35, 0.45, 0.15, 0.60, 0.30, 0.35},
    {0.65, 0.45, 0.35, 0.20, 0.50, 0.40, 0.45},
    {0.60, 0.50, 0.30, 0.25, 0.45, 0.45, 0.50},
    {0.50, 0.50, 0.35, 0.40, 0.40, 0.30, 0.40},
}};

int temperature_bucket(double t) {
  if (t < 0.4) return 0;
  if (t < 0.7) return 1;
  if (t < 0.95) return 2;
  return 3;
}

std::string prompt_field(std::string_view prompt, std::string_view label) {
  const auto pos = prompt.find(label);
  if (pos == std::string_view::npos) return {};
  const auto start = pos + label.size();
  const auto end = prompt.find('\n', start);
  return std::string(prompt.substr(start, end == std::string_view::npos ? end : end - start));
}

std::string lower_first(std::string s) {
  if (!s.empty() && s[0] >= 'A' && s[0] <= 'Z') s[0] = static_cast<char>(s[0] - 'A' + 'a');
  return s;
}

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
  for (auto pos = text.find(key); pos != std::string::npos;
       pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& pool) {
  return pool[rng.index(N)];
}

// ---- HTTP -----------------------------------------------------------------

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

void BackendConfig::apply_env() {
  if (const char* v = std::getenv("CCN_BACKEND_URL"); v && *v) base_url = v;
  if (const char* v = std::getenv("CCN_BACKEND_API_KEY"); v && *v) api_key = v;
  if (const char* v = std::getenv("CCN_BACKEND_MODEL"); v && *v) model_name = v;
}

void BackendConfig::validate() const {
  if (timeout_ms <= 0) throw InvalidArgument("timeout_ms must be > 0");
  if (max_tokens <= 0) throw InvalidArgument("max_tokens must be > 0");
  if (max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
  split_base_url(base_url);
}

GenerationResult MockBackend::generate(const GenerationRequest& request) {
  const auto start = Clock::now();
  const auto& p = request.params;
  if (!(p.temperature > 0.0) || !(p.top_p > 0.0 && p.top_p <= 1.0)) {
    throw InvalidArgument("invalid decoding params");
  }
  const int t_bucket = temperature_bucket(p.temperature);
  const int p_bucket = p.top_p < 0.85 ? 0 : 1;
  const std::uint64_t key =
      hash_combine(hash_combine(hash64(request.prompt), request.seed.value_or(0)),
                   static_cast<std::uint64_t>(t_bucket * 2 + p_bucket));
  Rng rng(key);
  const StanceMix& mix = kMixByTemperature[static_cast<std::size_t>(t_bucket)];

  const std::string goal = prompt_field(request.prompt, "Goals: ");
  const std::string boundary = prompt_field(request.prompt, "Boundaries: ");
  const std::string goal_step =
      goal.empty() ? "break the problem into smaller steps"
                   : "work toward \"" + lower_first(goal) + "\" in smaller steps";

  std::vector<std::string> body;
  if (rng.uniform() < mix.autonomy) {
    body.push_back(replace_all(pick(rng, kAutonomy), "{goal_step}", goal_step));
  }
  if (rng.uniform() < mix.dependency) body.emplace_back(pick(rng, kDependency));
  if (rng.uniform() < mix.coercion) body.emplace_back(pick(rng, kCoercion));
  if (rng.uniform() < mix.neutral) body.emplace_back(pick(rng, kNeutral));
  if (!boundary.empty() && rng.uniform() < mix.boundary) {
    body.push_back("You said \"" + lower_first(boundary) +
                   "\", so any plan should respect that.");
  }
  if (body.empty()) body.emplace_back(pick(rng, kNeutral));
  // Narrow nucleus keeps responses short.
  const std::size_t limit = p_bucket == 0 ? 2 : 4;
  if (body.size() > limit) body.resize(limit);
  // Wider sampling reorders the body.
  if (t_bucket >= 2) rng.shuffle(body);

  std::string text;
  auto append = [&text](std::string_view sentence) {
    if (!text.empty()) text += ' ';
    text += sentence;
  };
  if (rng.uniform() < mix.opener) append(pick(rng, kOpeners));
  for (const auto& s : body) append(s);
  if (rng.uniform() < mix.closer) append(pick(rng, kClosers));

  GenerationResult result;
  result.text = std::move(text);
  result.latency_ms = elapsed_ms(start);
  return result;
}

std::pair<std::string, std::string> split_base_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw InvalidArgument("backend url must include a scheme: '" + std::string(url) + "'");
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw InvalidArgument("unsupported url scheme '" + std::string(scheme) + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), ""};
  std::string prefix(url.substr(path_start));
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {std::string(url.substr(0, path_start)), prefix};
}

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
  std::tie(origin_, path_prefix_) = split_base_url(config_.base_url);
}

GenerationResult HttpBackend::generate(const GenerationRequest& request) {
  const auto start = Clock::now();
  json body{{"model", config_.model_name},
            {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
            {"temperature", request.params.temperature},
            {"top_p", request.params.top_p},
            {"max_tokens", config_.max_tokens}};
  if (request.seed) body["seed"] = *request.seed;
  const std::string payload = body.dump();
  const std::string path = path_prefix_ + "/chat/completions";

  httplib::Client client(origin_);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  for (int attempt = 0;; ++attempt) {
    const bool can_retry = attempt < config_.max_retries;
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      if (can_retry) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms << attempt));
        continue;
      }
      throw BackendError(BackendErrorKind::timeout,
                         "backend " + origin_ + " unavailable: " +
                             httplib::to_string(res.error()),
                         attempt);
    }
    if (res->status < 200 || res->status >= 300) {
      if (transient_status(res->status) && can_retry) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms << attempt));
        continue;
      }
      throw BackendError(BackendErrorKind::http_status,
                         "backend returned HTTP " + std::to_string(res->status), attempt,
                         res->status);
    }
    GenerationResult result;
    try {
      const json reply = json::parse(res->body);
      result.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
      if (reply.contains("usage")) {
        const auto& usage = reply["usage"];
        if (usage.contains("prompt_tokens")) result.prompt_tokens = usage["prompt_tokens"].get<int>();
        if (usage.contains("completion_tokens")) {
          result.completion_tokens = usage["completion_tokens"].get<int>();
        }
      }
    } catch (const json::exception& e) {
      throw BackendError(BackendErrorKind::malformed_body,
                         std::string("malformed completion body: ") + e.what(), attempt,
                         res->status);
    }
    result.retries = attempt;
    result.latency_ms = elapsed_ms(start);
    return result;
  }
}

bool HttpBackend::reachable() {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::milliseconds(std::min(config_.timeout_ms, 2000));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  // Any HTTP answer, even 404, means the server is up.
  return static_cast<bool>(client.Get(path_prefix_ + "/models"));
}

std::shared_ptr<Backend> make_backend(std::string_view kind, const BackendConfig& config) {
  if (kind == "mock") return std::make_shared<MockBackend>();
  if (kind == "http") return std::make_shared<HttpBackend>(config);
  throw InvalidArgument("unknown backend kind '" + std::string(kind) + "'");
}

std::uint64_t candidate_seed(std::uint64_t request_seed, CandidateLabel label) {
  return hash_combine(request_seed, hash64(to_string(label)));
}

std::vector<GenerationOutcome> generate_all(Backend& backend, const std::string& prompt,
                                            std::span<const PlanEntry> plan,
                                            std::optional<std::uint64_t> seed,
                                            int max_in_flight) {
  if (plan.empty()) throw InvalidArgument("generation plan is empty");
  std::vector<GenerationOutcome> outcomes(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) outcomes[i].entry = plan[i];

  auto run_one = [&](std::size_t i) {
    GenerationRequest request{prompt, plan[i].params,
                              candidate_seed(seed.value_or(0), plan[i].label)};
    try {
      outcomes[i].result = backend.generate(request);
    } catch (const BackendError& e) {
      outcomes[i].error = e;
    } catch (const std::exception& e) {
      outcomes[i].error = BackendError(BackendErrorKind::malformed_body, e.what());
    }
  };

  const auto workers = static_cast<std::size_t>(
      std::clamp<int>(max_in_flight, 1, static_cast<int>(plan.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < plan.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < plan.size(); i = next++) run_one(i);
      });
    }
  }

  const bool any_ok = std::any_of(outcomes.begin(), outcomes.end(),
                                  [](const auto& o) { return o.ok(); });
  if (!any_ok) {
    const auto& first = *outcomes.front().error;
    throw BackendError(BackendErrorKind::all_failed,
                       "all " + std::to_string(plan.size()) +
                           " generations failed; first error: " + first.what(),
                       first.retries(), first.http_status());
  }
  return outcomes;
}

}  // namespace ccn
