#pragma once

// Runs systems over benchmark examples and builds the comparison report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ccn/benchmark.hpp"
#include "ccn/errors.hpp"
#include "ccn/json_io.hpp"
#include "ccn/pipeline.hpp"
#include "ccn/types.hpp"

namespace ccn {

enum class System {
  baseline_greedy,
  ccn_candidate_only,
  reranked_full,
  reranked_no_care,  // reranking without the care-conditioned candidate
};

const char* to_string(System system);
System parse_system(std::string_view text);
CandidateSet candidate_set(System system);

// Raised when too many examples fail for a run to be meaningful.
class EvalAborted : public Error {
 public:
  using Error::Error;
};

struct EvalRecord {
  std::string example_id;
  std::string system;
  std::string category;
  std::optional<SelectionTrace> trace;  // absent when the example failed
  std::optional<std::string> error;

  bool ok() const { return trace.has_value(); }
  const CandidateResponse& chosen() const { return trace->chosen(); }
  double utility() const { return *chosen().utility; }
};

void to_json(json& j, const EvalRecord& r);
void from_json(const json& j, EvalRecord& r);

struct EvalOptions {
  int jobs = 4;
  std::uint64_t seed = 0;
  double max_failure_fraction = 0.10;
};

// Per-example generation seed, stable across systems so that shared
// candidates (e.g. greedy) are identical between runs.
std::uint64_t example_seed(std::string_view example_id, std::uint64_t run_seed);

/// One record per example, in input order. Each example starts from an empty
/// memory bank. Backend failures are recorded per example; throws
/// EvalAborted when more than max_failure_fraction of examples fail.
std::vector<EvalRecord> run_system(System system, std::span<const BenchmarkExample> examples,
                                   const Pipeline& pipeline, const EvalOptions& options = {});

struct WinRate {
  int wins = 0;    // b better than a
  int losses = 0;  // a better than b
  int ties = 0;    // identical chosen text or |dU| < 1e-9
  int n = 0;
  int ccn_selected = 0;  // b records whose chosen candidate is ccn
};

inline constexpr double kTieTolerance = 1e-9;

/// Per-example comparison of b against a. Both sets must cover the same
/// example ids (throws InvalidArgument otherwise); failed records in either
/// set drop that example from n.
WinRate win_rate(std::span<const EvalRecord> a, std::span<const EvalRecord> b);

struct SystemSummary {
  std::string name;
  int n = 0;
  int failures = 0;
  double mean_utility = 0.0;
  std::optional<double> delta_vs_baseline;
  AxisScores axis_means;
  double dir = 0.0;
  int ccn_selected = 0;
};

struct Comparison {
  std::string baseline;
  std::string system;
  WinRate result;
};

struct EvalReport {
  std::vector<SystemSummary> systems;
  std::vector<Comparison> comparisons;
};

using SystemRecords = std::pair<std::string, std::vector<EvalRecord>>;

/// The baseline is baseline_greedy when present, else the first system.
/// Throws InvalidArgument when a system has no successful records.
EvalReport summarize(std::span<const SystemRecords> systems, double dir_threshold = 3.5,
                     bool dir_inclusive = true);

json to_json(const EvalReport& report);
std::string format_table(const EvalReport& report);
std::string to_csv(const EvalReport& report);
// Long-format rows: system,example_id,utility.
std::string plot_csv(std::span<const SystemRecords> systems);

void write_records(std::span<const EvalRecord> records, const std::filesystem::path& path);
std::vector<EvalRecord> read_records(const std::filesystem::path& path);

}  // namespace ccn
