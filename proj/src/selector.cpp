#include "ccn/selector.hpp"

#include "ccn/errors.hpp"
#include "ccn/evaluators.hpp"

namespace ccn {
namespace {

// True when a should be preferred over b among feasible candidates.
bool better_feasible(const CandidateResponse& a, const CandidateResponse& b) {
  if (*a.utility != *b.utility) return *a.utility > *b.utility;
  if (*a.risk != *b.risk) return *a.risk < *b.risk;
  return plan_position(a.label) < plan_position(b.label);
}

bool better_fallback(const CandidateResponse& a, const CandidateResponse& b) {
  if (*a.risk != *b.risk) return *a.risk < *b.risk;
  if (*a.utility != *b.utility) return *a.utility > *b.utility;
  return plan_position(a.label) < plan_position(b.label);
}

}  // namespace

SelectionTrace select(std::span<const CandidateResponse> candidates, CareSignal care,
                      const PipelineConfig& config) {
  if (candidates.empty()) throw InvalidArgument("no candidates to select from");
  for (const auto& c : candidates) {
    if (!c.scores || !c.utility || !c.risk) {
      throw InvalidArgument(std::string("candidate '") + to_string(c.label) +
                            "' has not been scored");
    }
  }

  SelectionTrace trace;
  trace.care_signal = care.value;
  trace.kappa = kappa(care, config.kappa_base, config.kappa_slope);
  trace.candidates.assign(candidates.begin(), candidates.end());

  const CandidateResponse* best = nullptr;
  for (const auto& c : candidates) {
    if (*c.risk > trace.kappa) continue;
    trace.feasible_labels.push_back(c.label);
    if (!best || better_feasible(c, *best)) best = &c;
  }
  if (!best) {
    trace.constraint_relaxed = true;
    for (const auto& c : candidates) {
      if (!best || better_fallback(c, *best)) best = &c;
    }
  }
  trace.chosen_label = best->label;
  return trace;
}

}  // namespace ccn
