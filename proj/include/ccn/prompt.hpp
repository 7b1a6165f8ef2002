#pragma once

// Prompt text blocks fed to the generation backend.
//
//   [DependentState]          [Memory]            [Dialogue]
//   Goals: ...                - fact 1            User: ...
//   Boundaries: ...           - fact 2            Assistant: ...
//   Preferences: ...                              User: ...
//   Vulnerability: 0.72       (or "- None")       Assistant:
//   Commitments: ...
//   Stress Context: ...
//
// Blocks are separated by one blank line. The layout is bit-exact; the
// golden files under tests/golden pin it.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccn/types.hpp"

namespace ccn {

std::string format_dependent_state(const DependentState& state);
// Inverse of format_dependent_state; accepts any decimal for vulnerability.
// Throws DataError on malformed blocks.
DependentState parse_dependent_state(std::string_view block);

std::string format_memory(std::span<const std::string> facts);
std::vector<std::string> parse_memory(std::string_view block);

// Throws InvalidArgument when the context does not end with a user turn.
std::string build_prompt(const DependentState& state, const DialogueContext& ctx);

}  // namespace ccn
