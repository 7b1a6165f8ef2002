#pragma once

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>

#include "ccn/featurizer.hpp"
#include "ccn/types.hpp"

namespace ccn {

using StateEmbedding = Eigen::VectorXd;

/// Linear -> ReLU -> Linear.
struct MlpParams {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // output x hidden
  Eigen::VectorXd b2;
  std::uint64_t seed = 0;

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  int output_dim() const { return static_cast<int>(w2.rows()); }

  /// He-scaled normal weights, zero biases.
  static MlpParams init(int input_dim, int hidden_dim, int output_dim,
                        std::uint64_t seed);
  /// Throws DimensionMismatch when the layer shapes do not chain.
  void check_shapes() const;
};

/// Frozen encoder from featurized DependentState text to a latent vector.
class StateEncoder {
 public:
  explicit StateEncoder(MlpParams params);

  static StateEncoder seeded(int dim, std::uint64_t seed);

  StateEmbedding encode(const DependentState& state) const;
  StateEmbedding encode_features(const FeatureVector& features) const;

  const MlpParams& params() const { return params_; }
  int dim() const { return params_.output_dim(); }

  void save(const std::filesystem::path& path) const;
  // Throws DimensionMismatch when expected_dim > 0 and the stored dims differ.
  static StateEncoder load(const std::filesystem::path& path, int expected_dim = 0);

 private:
  MlpParams params_;
};

}  // namespace ccn
