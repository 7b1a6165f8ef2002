#include "ccn/types.hpp"

#include <cmath>

#include "ccn/errors.hpp"

namespace ccn {

const char* to_string(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::timeout:
      return "timeout";
    case BackendErrorKind::http_status:
      return "http_status";
    case BackendErrorKind::malformed_body:
      return "malformed_body";
    case BackendErrorKind::all_failed:
      return "all_failed";
  }
  return "unknown";
}

void validate(const DependentState& state) {
  if (!std::isfinite(state.vulnerability) || state.vulnerability < 0.0 ||
      state.vulnerability > 1.0) {
    throw OutOfRange("vulnerability must be in [0,1], got " +
                     std::to_string(state.vulnerability));
  }
}

const char* to_string(Role role) {
  return role == Role::user ? "user" : "assistant";
}

Role parse_role(std::string_view text) {
  if (text == "user") return Role::user;
  if (text == "assistant") return Role::assistant;
  throw InvalidArgument("unknown dialogue role '" + std::string(text) + "'");
}

const std::string& DialogueContext::latest_user_text() const {
  if (turns.empty() || turns.back().role != Role::user) {
    throw InvalidArgument("dialogue must end with a user turn");
  }
  return turns.back().text;
}

std::string DialogueContext::dialogue_text() const {
  std::string out;
  for (const auto& turn : turns) {
    if (!out.empty()) out += '\n';
    out += turn.text;
  }
  return out;
}

void validate_for_generation(const DialogueContext& ctx) {
  if (ctx.turns.empty()) throw InvalidArgument("dialogue is empty");
  for (const auto& turn : ctx.turns) {
    if (turn.text.empty()) throw InvalidArgument("dialogue turn has empty text");
  }
  if (ctx.turns.back().role != Role::user) {
    throw InvalidArgument("dialogue must end with a user turn");
  }
}

void validate(const AxisScores& s) {
  for (double v : {s.autonomy, s.dependency, s.coercion, s.support}) {
    if (!std::isfinite(v) || v < 1.0 || v > 5.0) {
      throw OutOfRange("axis score must be in [1,5], got " + std::to_string(v));
    }
  }
}

void validate(const UtilityWeights& w) {
  for (double v : {w.w_autonomy, w.w_dependency, w.w_coercion, w.w_support,
                   w.w_length}) {
    if (!std::isfinite(v)) throw InvalidArgument("utility weight is not finite");
  }
  if (w.length_norm_chars <= 0) {
    throw InvalidArgument("length_norm_chars must be positive");
  }
}

CareSignal CareSignal::checked(double value) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    throw OutOfRange("care signal must be in [0,1], got " +
                     std::to_string(value));
  }
  return CareSignal{value};
}

const char* to_string(CandidateLabel label) {
  switch (label) {
    case CandidateLabel::greedy:
      return "greedy";
    case CandidateLabel::sampled1:
      return "sampled1";
    case CandidateLabel::sampled2:
      return "sampled2";
    case CandidateLabel::sampled3:
      return "sampled3";
    case CandidateLabel::ccn:
      return "ccn";
  }
  return "unknown";
}

CandidateLabel parse_candidate_label(std::string_view text) {
  if (text == "greedy") return CandidateLabel::greedy;
  if (text == "sampled1") return CandidateLabel::sampled1;
  if (text == "sampled2") return CandidateLabel::sampled2;
  if (text == "sampled3") return CandidateLabel::sampled3;
  if (text == "ccn") return CandidateLabel::ccn;
  throw InvalidArgument("unknown candidate label '" + std::string(text) + "'");
}

int plan_position(CandidateLabel label) { return static_cast<int>(label); }

const CandidateResponse& SelectionTrace::chosen() const {
  for (const auto& c : candidates) {
    if (c.label == chosen_label) return c;
  }
  throw InvalidArgument("chosen label missing from candidates");
}

const char* to_string(CareVariant variant) {
  return variant == CareVariant::token_regressor ? "token_regressor" : "fusion";
}

CareVariant parse_care_variant(std::string_view text) {
  if (text == "token_regressor" || text == "A") return CareVariant::token_regressor;
  if (text == "fusion" || text == "B") return CareVariant::fusion;
  throw InvalidArgument("unknown care variant '" + std::string(text) + "'");
}

void validate(const PipelineConfig& c) {
  validate(c.utility_weights);
  if (c.memory_slots < 1) throw InvalidArgument("memory_slots must be >= 1");
  if (c.embed_dim < 1) throw InvalidArgument("embed_dim must be >= 1");
  if (!(c.dir_threshold >= 1.0 && c.dir_threshold <= 5.0)) {
    throw InvalidArgument("dir_threshold must be in [1,5]");
  }
  if (!std::isfinite(c.kappa_base) || !std::isfinite(c.kappa_slope)) {
    throw InvalidArgument("kappa parameters must be finite");
  }
  if (c.max_in_flight < 1) throw InvalidArgument("max_in_flight must be >= 1");
  for (const auto& o : c.candidate_plan_overrides) {
    if (o.label == CandidateLabel::ccn) {
      throw InvalidArgument("the ccn candidate's params come from the care signal");
    }
    if (!(o.params.temperature > 0.0) || !(o.params.top_p > 0.0 && o.params.top_p <= 1.0)) {
      throw InvalidArgument("plan override has invalid decoding params");
    }
  }
}

}  // namespace ccn
