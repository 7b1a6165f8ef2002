#include "ccn/decoding_policy.hpp"

#include <algorithm>

#include "ccn/errors.hpp"

namespace ccn {

DecodingParams care_to_decoding(CareSignal care) {
  const double m = CareSignal::checked(care.value).value;
  // Evaluated in percent so the tabulated points (m = 0, 0.5, 1) come out as
  // the exact decimals, e.g. 0.89 rather than 0.8899999999999999.
  return DecodingParams{
      .temperature = std::max(0.35, (90.0 - 40.0 * m) / 100.0),
      .top_p = std::min(0.98, std::max(0.78, (95.0 - 12.0 * m) / 100.0)),
  };
}

DecodingParams baseline_decoding(CandidateLabel label) {
  switch (label) {
    case CandidateLabel::greedy:
      return {0.20, 0.75};
    case CandidateLabel::sampled1:
      return {0.55, 0.80};
    case CandidateLabel::sampled2:
      return {0.80, 0.92};
    case CandidateLabel::sampled3:
      return {1.05, 0.98};
    case CandidateLabel::ccn:
      break;
  }
  throw InvalidArgument("the ccn candidate has no fixed decoding params");
}

std::vector<PlanEntry> candidate_plan(CareSignal care, std::span<const PlanEntry> overrides) {
  std::vector<PlanEntry> plan;
  plan.reserve(kCandidateLabelCount);
  for (auto label : {CandidateLabel::greedy, CandidateLabel::sampled1,
                     CandidateLabel::sampled2, CandidateLabel::sampled3}) {
    DecodingParams params = baseline_decoding(label);
    for (const auto& o : overrides) {
      if (o.label == label) params = o.params;
    }
    plan.push_back({label, params});
  }
  plan.push_back({CandidateLabel::ccn, care_to_decoding(care)});
  return plan;
}

}  // namespace ccn
