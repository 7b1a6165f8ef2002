#include "ccn/prompt.hpp"

#include <array>
#include <charconv>
#include <cstdio>

#include "ccn/errors.hpp"

namespace ccn {
namespace {

constexpr std::string_view kStateHeader = "[DependentState]";
constexpr std::string_view kMemoryHeader = "[Memory]";
constexpr std::string_view kDialogueHeader = "[Dialogue]";
constexpr std::string_view kNoMemory = "- None";

constexpr std::array<std::string_view, 6> kStateLabels = {
    "Goals: ", "Boundaries: ", "Preferences: ",
    "Vulnerability: ", "Commitments: ", "Stress Context: "};

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  // A single trailing newline is tolerated.
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string_view strip_label(std::string_view line, std::string_view label) {
  if (line.substr(0, label.size()) == label) return line.substr(label.size());
  // "Goals:" with an empty value and no trailing space.
  const auto bare = label.substr(0, label.size() - 1);
  if (line == bare) return {};
  throw DataError("expected line starting with '" + std::string(bare) +
                  "', got '" + std::string(line) + "'");
}

std::string format_vulnerability(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.2f", v);
  return buf.data();
}

}  // namespace

std::string format_dependent_state(const DependentState& s) {
  std::string out;
  out.reserve(128 + s.goals.size() + s.boundaries.size() +
              s.preferences.size() + s.commitments.size() +
              s.stress_context.size());
  out += kStateHeader;
  out += '\n';
  const std::array<std::string, 6> values = {
      s.goals,       s.boundaries, s.preferences, format_vulnerability(s.vulnerability),
      s.commitments, s.stress_context};
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += kStateLabels[i];
    out += values[i];
    if (i + 1 < values.size()) out += '\n';
  }
  return out;
}

DependentState parse_dependent_state(std::string_view block) {
  const auto lines = split_lines(block);
  if (lines.size() != 7 || lines[0] != kStateHeader) {
    throw DataError("malformed [DependentState] block");
  }
  DependentState s;
  s.goals = std::string(strip_label(lines[1], kStateLabels[0]));
  s.boundaries = std::string(strip_label(lines[2], kStateLabels[1]));
  s.preferences = std::string(strip_label(lines[3], kStateLabels[2]));
  const auto vuln = strip_label(lines[4], kStateLabels[3]);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(vuln.data(), vuln.data() + vuln.size(), v);
  if (ec != std::errc{} || ptr != vuln.data() + vuln.size()) {
    throw DataError("malformed vulnerability '" + std::string(vuln) + "'");
  }
  s.vulnerability = v;
  s.commitments = std::string(strip_label(lines[5], kStateLabels[4]));
  s.stress_context = std::string(strip_label(lines[6], kStateLabels[5]));
  return s;
}

std::string format_memory(std::span<const std::string> facts) {
  std::string out(kMemoryHeader);
  if (facts.empty()) {
    out += '\n';
    out += kNoMemory;
    return out;
  }
  for (const auto& fact : facts) {
    out += "\n- ";
    out += fact;
  }
  return out;
}

std::vector<std::string> parse_memory(std::string_view block) {
  const auto lines = split_lines(block);
  if (lines.size() < 2 || lines[0] != kMemoryHeader) {
    throw DataError("malformed [Memory] block");
  }
  if (lines.size() == 2 && lines[1] == kNoMemory) return {};
  std::vector<std::string> facts;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].substr(0, 2) != "- ") {
      throw DataError("memory line must start with '- ': '" +
                      std::string(lines[i]) + "'");
    }
    facts.emplace_back(lines[i].substr(2));
  }
  return facts;
}

std::string build_prompt(const DependentState& state, const DialogueContext& ctx) {
  validate_for_generation(ctx);
  std::string out = format_dependent_state(state);
  out += "\n\n";
  out += format_memory(ctx.memory_facts);
  out += "\n\n";
  out += kDialogueHeader;
  out += '\n';
  for (const auto& turn : ctx.turns) {
    out += turn.role == Role::user ? "User: " : "Assistant: ";
    out += turn.text;
    out += '\n';
  }
  out += "Assistant:";
  return out;
}

}  // namespace ccn
