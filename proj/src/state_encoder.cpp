#include "ccn/state_encoder.hpp"

#include <cmath>

#include "ccn/errors.hpp"
#include "ccn/json_io.hpp"
#include "ccn/prompt.hpp"
#include "ccn/rng.hpp"

namespace ccn {

MlpParams MlpParams::init(int input_dim, int hidden_dim, int output_dim,
                          std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1) {
    throw InvalidArgument("MLP dimensions must be positive");
  }
  Rng rng(seed);
  MlpParams p;
  p.seed = seed;
  p.w1.resize(hidden_dim, input_dim);
  p.w2.resize(output_dim, hidden_dim);
  const double s1 = std::sqrt(2.0 / input_dim);
  const double s2 = std::sqrt(2.0 / hidden_dim);
  for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = s1 * rng.normal();
  for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = s2 * rng.normal();
  p.b1 = Eigen::VectorXd::Zero(hidden_dim);
  p.b2 = Eigen::VectorXd::Zero(output_dim);
  return p;
}

void MlpParams::check_shapes() const {
  if (b1.size() != w1.rows() || w2.cols() != w1.rows() || b2.size() != w2.rows()) {
    throw DimensionMismatch("MLP layer shapes do not chain");
  }
}

StateEncoder::StateEncoder(MlpParams params) : params_(std::move(params)) {
  params_.check_shapes();
}

StateEncoder StateEncoder::seeded(int dim, std::uint64_t seed) {
  return StateEncoder(MlpParams::init(dim, dim, dim, seed));
}

StateEmbedding StateEncoder::encode(const DependentState& state) const {
  return encode_features(featurize(format_dependent_state(state), params_.input_dim()));
}

StateEmbedding StateEncoder::encode_features(const FeatureVector& x) const {
  if (x.size() != params_.input_dim()) {
    throw DimensionMismatch("state encoder expects input dim " +
                            std::to_string(params_.input_dim()) + ", got " +
                            std::to_string(x.size()));
  }
  const Eigen::VectorXd hidden = (params_.w1 * x + params_.b1).cwiseMax(0.0);
  return params_.w2 * hidden + params_.b2;
}

void StateEncoder::save(const std::filesystem::path& path) const {
  json j{{"kind", "state_encoder"},
         {"dims", {params_.input_dim(), params_.hidden_dim(), params_.output_dim()}},
         {"seed", params_.seed},
         {"w1", matrix_to_json(params_.w1)},
         {"b1", vector_to_json(params_.b1)},
         {"w2", matrix_to_json(params_.w2)},
         {"b2", vector_to_json(params_.b2)}};
  write_json_file(path, j, -1);
}

StateEncoder StateEncoder::load(const std::filesystem::path& path, int expected_dim) {
  const json j = read_json_file(path);
  if (j.value("kind", "") != "state_encoder") {
    throw DataError(path.string() + " is not a state encoder snapshot");
  }
  MlpParams p;
  p.seed = j.value("seed", std::uint64_t{0});
  p.w1 = matrix_from_json(j.at("w1"));
  p.b1 = vector_from_json(j.at("b1"));
  p.w2 = matrix_from_json(j.at("w2"));
  p.b2 = vector_from_json(j.at("b2"));
  const auto dims = j.at("dims").get<std::vector<int>>();
  if (dims.size() != 3 || dims[0] != p.input_dim() || dims[1] != p.hidden_dim() ||
      dims[2] != p.output_dim()) {
    throw DimensionMismatch("state encoder dims header disagrees with weights");
  }
  if (expected_dim > 0 && (p.input_dim() != expected_dim || p.output_dim() != expected_dim)) {
    throw DimensionMismatch("state encoder snapshot has dim " +
                            std::to_string(p.output_dim()) + ", config expects " +
                            std::to_string(expected_dim));
  }
  return StateEncoder(std::move(p));
}

}  // namespace ccn
