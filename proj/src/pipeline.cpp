#include "ccn/pipeline.hpp"

#include <algorithm>

#include "ccn/decoding_policy.hpp"
#include "ccn/errors.hpp"
#include "ccn/prompt.hpp"
#include "ccn/selector.hpp"

namespace ccn {

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<Backend> backend,
                   std::shared_ptr<const Evaluator> evaluator,
                   std::shared_ptr<const CareController> controller,
                   std::shared_ptr<const StateEncoder> encoder)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      evaluator_(std::move(evaluator)),
      controller_(std::move(controller)),
      encoder_(std::move(encoder)) {
  validate(config_);
  if (!backend_ || !evaluator_ || !controller_ || !encoder_) {
    throw InvalidArgument("pipeline requires backend, evaluator, controller and encoder");
  }
  if (encoder_->dim() != config_.embed_dim) {
    throw DimensionMismatch("state encoder dim " + std::to_string(encoder_->dim()) +
                            " != embed_dim " + std::to_string(config_.embed_dim));
  }
}

std::vector<PlanEntry> filter_plan(const std::vector<PlanEntry>& plan, CandidateSet set) {
  std::vector<PlanEntry> out;
  for (const auto& e : plan) {
    const bool keep = set == CandidateSet::full ||
                      (set == CandidateSet::greedy_only && e.label == CandidateLabel::greedy) ||
                      (set == CandidateSet::ccn_only && e.label == CandidateLabel::ccn) ||
                      (set == CandidateSet::without_ccn && e.label != CandidateLabel::ccn);
    if (keep) out.push_back(e);
  }
  return out;
}

void Pipeline::score_candidate(const DialogueContext& ctx, CandidateResponse& c,
                               const PipelineConfig& config) const {
  const AxisScores scores = evaluator_->score(ctx, c.text);
  validate(scores);
  c.scores = scores;
  c.utility = compute_utility(scores, utf8_length(c.text), config.utility_weights);
  c.risk = compute_risk(scores);
}

PipelineResult Pipeline::respond(const DependentState& state, const DialogueContext& ctx,
                                 MemoryBank& bank, std::optional<std::uint64_t> seed,
                                 CandidateSet set, const PipelineConfig* overrides) const {
  const PipelineConfig& cfg = overrides ? *overrides : config_;
  if (overrides) validate(cfg);
  validate(state);
  validate_for_generation(ctx);
  if (bank.dim() != config_.embed_dim) {
    throw DimensionMismatch("memory bank dim does not match embed_dim");
  }
  const std::string prompt = build_prompt(state, ctx);

  PipelineResult result;
  // (1) state encoding and memory write, before the care signal.
  result.state_embedding_norm = encoder_->encode(state).norm();
  // The dialogue feature is computed once and used for both write and read.
  const FeatureVector psi = featurize(ctx.dialogue_text(), config_.embed_dim);
  result.memory_slot_written = bank.update(psi);
  result.memory_occupied = bank.occupied_count();
  result.memory = bank.retrieve(psi);

  // (2) care signal.
  const CareSignal care = controller_->predict(state, ctx, bank);

  // (3) candidate generation.
  const auto plan =
      filter_plan(candidate_plan(care, cfg.candidate_plan_overrides), set);
  const auto outcomes = generate_all(*backend_, prompt, plan, seed, cfg.max_in_flight);

  // (4) scoring.
  std::vector<CandidateResponse> candidates;
  for (const auto& o : outcomes) {
    if (!o.ok()) {
      result.failures.push_back({o.entry.label, to_string(o.error->kind()), o.error->what(),
                                 o.error->retries()});
      continue;
    }
    CandidateResponse c;
    c.label = o.entry.label;
    c.decoding = o.entry.params;
    c.text = o.result->text;
    score_candidate(ctx, c, cfg);
    candidates.push_back(std::move(c));
  }

  // (5) selection.
  result.trace = select(candidates, care, cfg);
  return result;
}

json to_json(const PipelineResult& r) {
  json failures = json::array();
  for (const auto& f : r.failures) {
    failures.push_back({{"label", to_string(f.label)},
                        {"kind", f.kind},
                        {"message", f.message},
                        {"retries", f.retries}});
  }
  return json{{"trace", r.trace},
              {"memory",
               {{"slot_written", r.memory_slot_written},
                {"occupied_slots", r.memory_occupied},
                {"retrieval_weights", r.memory.weights},
                {"retrieval_slots", r.memory.slot_indices}}},
              {"state_embedding_norm", r.state_embedding_norm},
              {"failures", failures}};
}

}  // namespace ccn
