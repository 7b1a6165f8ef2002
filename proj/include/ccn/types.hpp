#pragma once

// Domain value types shared across the pipeline.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccn {

/// Structured description of the user the assistant is talking to.
struct DependentState {
  std::string goals;
  std::string boundaries;
  std::string preferences;
  double vulnerability = 0.0;  // in [0,1]
  std::string commitments;
  std::string stress_context;

  bool operator==(const DependentState&) const = default;
};

/// Throws OutOfRange when vulnerability is outside [0,1] or not finite.
void validate(const DependentState& state);

enum class Role { user, assistant };

const char* to_string(Role role);
Role parse_role(std::string_view text);

struct DialogueTurn {
  Role role = Role::user;
  std::string text;

  bool operator==(const DialogueTurn&) const = default;
};

struct DialogueContext {
  std::vector<DialogueTurn> turns;
  std::vector<std::string> memory_facts;

  bool operator==(const DialogueContext&) const = default;

  // Text of the final user turn; throws InvalidArgument when the context
  // does not end with a user turn.
  const std::string& latest_user_text() const;
  // All turn texts joined by newlines.
  std::string dialogue_text() const;
};

/// Throws InvalidArgument unless the context is non-empty, every turn has
/// text, and the last turn is from the user.
void validate_for_generation(const DialogueContext& ctx);

/// Evaluator output on the four relational axes, each in [1,5].
struct AxisScores {
  double autonomy = 3.0;
  double dependency = 3.0;
  double coercion = 3.0;
  double support = 3.0;

  bool operator==(const AxisScores&) const = default;
};

void validate(const AxisScores& scores);

struct UtilityWeights {
  double w_autonomy = 1.00;
  double w_dependency = 1.00;
  double w_coercion = 1.25;
  double w_support = 0.35;
  double w_length = 0.03;
  int length_norm_chars = 100;

  bool operator==(const UtilityWeights&) const = default;
};

void validate(const UtilityWeights& weights);

struct DecodingParams {
  double temperature = 1.0;
  double top_p = 1.0;

  bool operator==(const DecodingParams&) const = default;
};

/// Scalar care signal in [0,1].
struct CareSignal {
  double value = 0.0;

  /// Throws OutOfRange unless value is finite and in [0,1].
  static CareSignal checked(double value);
};

enum class CandidateLabel { greedy, sampled1, sampled2, sampled3, ccn };

inline constexpr int kCandidateLabelCount = 5;

const char* to_string(CandidateLabel label);
CandidateLabel parse_candidate_label(std::string_view text);
// Position in the fixed candidate order (greedy first, ccn last).
int plan_position(CandidateLabel label);

struct PlanEntry {
  CandidateLabel label = CandidateLabel::greedy;
  DecodingParams params;

  bool operator==(const PlanEntry&) const = default;
};

struct CandidateResponse {
  CandidateLabel label = CandidateLabel::greedy;
  std::string text;
  DecodingParams decoding;
  std::optional<AxisScores> scores;
  std::optional<double> utility;
  std::optional<double> risk;
};

struct SelectionTrace {
  double care_signal = 0.0;
  double kappa = 0.0;
  std::vector<CandidateResponse> candidates;
  std::vector<CandidateLabel> feasible_labels;
  CandidateLabel chosen_label = CandidateLabel::greedy;
  bool constraint_relaxed = false;

  const CandidateResponse& chosen() const;
};

enum class CareVariant { token_regressor, fusion };

const char* to_string(CareVariant variant);
CareVariant parse_care_variant(std::string_view text);

struct PipelineConfig {
  UtilityWeights utility_weights;
  int memory_slots = 16;
  int embed_dim = 128;
  double dir_threshold = 3.5;
  bool dir_inclusive = true;
  double kappa_base = 0.9;
  double kappa_slope = 0.4;
  CareVariant care_variant = CareVariant::token_regressor;
  int max_in_flight = 5;
  // Replaces the fixed decoding params of matching non-ccn plan entries.
  std::vector<PlanEntry> candidate_plan_overrides;
};

void validate(const PipelineConfig& config);

}  // namespace ccn
