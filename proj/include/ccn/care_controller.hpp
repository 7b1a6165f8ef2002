#pragma once

// Care signal m in [0,1]. Two controllers share one interface:
//
//  * token regressor: Embedding -> LayerNorm -> mean pool -> Linear -> GELU
//    -> Linear -> GELU -> Linear -> sigmoid, over the tokens of the
//    formatted DependentState block. Trained by MSE regression onto the
//    state's vulnerability.
//  * fusion: Linear -> ReLU -> Linear -> sigmoid over the concatenation of
//    the state embedding, dialogue features and the memory read-out.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccn/featurizer.hpp"
#include "ccn/json_io.hpp"
#include "ccn/memory_bank.hpp"
#include "ccn/state_encoder.hpp"
#include "ccn/types.hpp"

namespace ccn {

struct RegressorDims {
  int vocab_size = kDefaultVocabSize;
  int embed_dim = 64;
  int hidden_dim = 64;

  bool operator==(const RegressorDims&) const = default;
};

struct RegressorParams {
  RegressorDims dims;
  std::uint64_t seed = 0;
  Eigen::MatrixXd embedding;  // vocab_size x embed_dim
  Eigen::VectorXd ln_gain;    // embed_dim
  Eigen::VectorXd ln_bias;
  Eigen::MatrixXd w1;  // hidden x embed
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // hidden x hidden
  Eigen::VectorXd b2;
  Eigen::VectorXd w3;  // hidden
  double b3 = 0.0;

  static RegressorParams init(const RegressorDims& dims, std::uint64_t seed);
  // Same shapes, all zero (gradient accumulator).
  static RegressorParams zeros_like(const RegressorParams& other);
  void check_shapes() const;
  bool all_finite() const;

  bool operator==(const RegressorParams& o) const;
};

// Forward pass on one token sequence.
double regressor_predict(const RegressorParams& params, const TokenSequence& tokens);

struct RegressionSample {
  TokenSequence tokens;
  double label = 0.0;
};

// Mean squared error over the batch; when grads is non-null it receives
// dLoss/dParams (overwritten, not accumulated).
double regressor_loss(const RegressorParams& params,
                      std::span<const RegressionSample> batch,
                      RegressorParams* grads);

enum class Optimizer { sgd, adam };

struct TrainHyper {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 20;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;
  RegressorDims dims;
};

struct TrainReport {
  int epochs_run = 0;
  int best_epoch = 0;  // 0 = initial parameters
  double train_mse = 0.0;
  double val_mse = 0.0;
  std::optional<double> test_r;
  std::optional<double> test_p;
  int test_n = 0;
  std::vector<double> train_history;  // per epoch, full-set MSE
  std::vector<double> val_history;
};

json report_to_json(const TrainReport& report);

// Samples from formatted DependentState text, labelled by vulnerability.
std::vector<RegressionSample> samples_from_states(std::span<const DependentState> states,
                                                  int vocab_size = kDefaultVocabSize);

struct TrainResult {
  RegressorParams params;
  TrainReport report;
};

/// Minibatch training on MSE; returns the parameters with the lowest
/// validation MSE (the initial parameters count as epoch 0). When test is
/// non-empty the report carries test Pearson r and p.
TrainResult train_regressor(std::span<const RegressionSample> train,
                            std::span<const RegressionSample> val,
                            std::span<const RegressionSample> test,
                            const TrainHyper& hyper);

/// Untrained seeded regressor evaluated on the test samples.
TrainReport random_controller_baseline(std::span<const RegressionSample> test,
                                       std::uint64_t seed,
                                       const RegressorDims& dims = {});

struct FusionParams {
  Eigen::MatrixXd w1;  // hidden x (3 * dim)
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;
  std::uint64_t seed = 0;

  static FusionParams init(int dim, int hidden_dim, std::uint64_t seed);
  int input_dim() const { return static_cast<int>(w1.cols()); }
};

double fusion_predict(const FusionParams& params, const Eigen::VectorXd& state_embedding,
                      const FeatureVector& dialogue_features,
                      const Eigen::VectorXd& memory_summary);

class CareController {
 public:
  static CareController token_regressor(RegressorParams params, bool trained);
  static CareController fusion(FusionParams params,
                               std::shared_ptr<const StateEncoder> encoder);

  CareVariant variant() const { return variant_; }
  bool trained() const { return trained_; }
  const RegressorParams& regressor() const;

  CareSignal predict(const DependentState& state, const DialogueContext& ctx,
                     const MemoryBank& bank) const;

  // Parameter file: {"kind": "care_controller", "variant", "dims",
  // "vocab_size", "seed", "trained", "weights": {...}}.
  void save(const std::filesystem::path& path) const;
  // Throws DataError for a missing/foreign file and DimensionMismatch when the
  // stored dims disagree with the encoder's.
  static CareController load(const std::filesystem::path& path,
                             std::shared_ptr<const StateEncoder> encoder = nullptr);

 private:
  CareVariant variant_ = CareVariant::token_regressor;
  bool trained_ = false;
  std::optional<RegressorParams> regressor_;
  std::optional<FusionParams> fusion_;
  std::shared_ptr<const StateEncoder> encoder_;
};

}  // namespace ccn
