#pragma once

// One turn of the full pipeline: encode state, update memory, compute the
// care signal, fan out candidate generation, score, and select.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccn/backend.hpp"
#include "ccn/care_controller.hpp"
#include "ccn/evaluators.hpp"
#include "ccn/memory_bank.hpp"
#include "ccn/state_encoder.hpp"
#include "ccn/types.hpp"

namespace ccn {

// Which plan entries a run generates.
enum class CandidateSet {
  full,         // all five
  greedy_only,  // baseline
  ccn_only,     // care-conditioned candidate alone
  without_ccn,  // reranking over the four fixed-decoding candidates
};

struct FailedCandidate {
  CandidateLabel label;
  std::string kind;
  std::string message;
  int retries = 0;
};

struct PipelineResult {
  SelectionTrace trace;
  MemorySummary memory;
  int memory_slot_written = -1;
  int memory_occupied = 0;
  double state_embedding_norm = 0.0;
  std::vector<FailedCandidate> failures;

  const std::string& response_text() const { return trace.chosen().text; }
};

json to_json(const PipelineResult& result);

class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::shared_ptr<Backend> backend,
           std::shared_ptr<const Evaluator> evaluator,
           std::shared_ptr<const CareController> controller,
           std::shared_ptr<const StateEncoder> encoder);

  /// Mutates bank (one slot written with the current turn's features).
  /// Throws InvalidArgument / OutOfRange on bad inputs and BackendError when
  /// every candidate generation failed.
  PipelineResult respond(const DependentState& state, const DialogueContext& ctx,
                         MemoryBank& bank, std::optional<std::uint64_t> seed = std::nullopt,
                         CandidateSet set = CandidateSet::full,
                         const PipelineConfig* overrides = nullptr) const;

  // Scores one candidate in place (scores, utility, risk).
  void score_candidate(const DialogueContext& ctx, CandidateResponse& candidate,
                       const PipelineConfig& config) const;

  MemoryBank new_bank() const { return MemoryBank(config_.memory_slots, config_.embed_dim); }

  const PipelineConfig& config() const { return config_; }
  Backend& backend() const { return *backend_; }
  const CareController& controller() const { return *controller_; }

 private:
  PipelineConfig config_;
  std::shared_ptr<Backend> backend_;
  std::shared_ptr<const Evaluator> evaluator_;
  std::shared_ptr<const CareController> controller_;
  std::shared_ptr<const StateEncoder> encoder_;
};

std::vector<PlanEntry> filter_plan(const std::vector<PlanEntry>& plan, CandidateSet set);

}  // namespace ccn
