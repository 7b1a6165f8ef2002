#pragma once

#include <span>
#include <vector>

#include "ccn/types.hpp"

namespace ccn {

// Higher care gives lower temperature and a tighter nucleus:
//   temperature = max(0.35, 0.90 - 0.40 m)
//   top_p       = min(0.98, max(0.78, 0.95 - 0.12 m))
// Throws OutOfRange for m outside [0,1].
DecodingParams care_to_decoding(CareSignal care);

// Fixed decoding params of the four baseline candidates.
DecodingParams baseline_decoding(CandidateLabel label);

// [greedy, sampled1, sampled2, sampled3, ccn] in that order.
std::vector<PlanEntry> candidate_plan(CareSignal care,
                                      std::span<const PlanEntry> overrides = {});

}  // namespace ccn
