#pragma once

#include <span>

#include "ccn/types.hpp"

namespace ccn {

/// Constrained argmax over scored candidates:
///   feasible = {c : risk(c) <= kappa(m)}
///   chosen   = highest-utility feasible candidate, or the lowest-risk
///              candidate (constraint_relaxed = true) when none is feasible.
/// Ties: higher utility, then lower risk, then earlier plan position.
/// Throws InvalidArgument for an empty list or unscored candidates.
SelectionTrace select(std::span<const CandidateResponse> candidates, CareSignal care,
                      const PipelineConfig& config);

}  // namespace ccn
