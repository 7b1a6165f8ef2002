#include "ccn/care_controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ccn/errors.hpp"
#include "ccn/hashing.hpp"
#include "ccn/prompt.hpp"
#include "ccn/rng.hpp"
#include "ccn/stats.hpp"

namespace ccn {
namespace {

constexpr double kLayerNormEps = 1e-5;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Exact GELU: x * Phi(x).
double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

void fill_normal(Eigen::MatrixXd& m, Rng& rng, double scale) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
}

void fill_normal(Eigen::VectorXd& v, Rng& rng, double scale) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = scale * rng.normal();
}

// Intermediate values of one forward pass, kept for backprop.
struct ForwardCache {
  std::vector<Eigen::VectorXd> normalized;  // x-hat per token
  std::vector<double> inv_std;
  Eigen::VectorXd pooled;
  Eigen::VectorXd h1, a1, h2, a2;
  double output = 0.0;
};

ForwardCache forward(const RegressorParams& p, const TokenSequence& tokens) {
  if (tokens.ids.empty()) throw InvalidArgument("empty token sequence");
  const auto e = p.dims.embed_dim;
  ForwardCache c;
  c.normalized.reserve(tokens.ids.size());
  c.inv_std.reserve(tokens.ids.size());
  Eigen::VectorXd xhat_sum = Eigen::VectorXd::Zero(e);
  for (int id : tokens.ids) {
    if (id < 0 || id >= p.dims.vocab_size) {
      throw DimensionMismatch("token id " + std::to_string(id) + " outside vocabulary");
    }
    const Eigen::VectorXd x = p.embedding.row(id).transpose();
    const double mu = x.mean();
    const Eigen::VectorXd centered = x.array() - mu;
    const double var = centered.squaredNorm() / e;
    const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    c.normalized.push_back(centered * inv_std);
    c.inv_std.push_back(inv_std);
    xhat_sum += c.normalized.back();
  }
  const double n = static_cast<double>(tokens.ids.size());
  c.pooled = p.ln_gain.cwiseProduct(xhat_sum / n) + p.ln_bias;
  c.h1 = p.w1 * c.pooled + p.b1;
  c.a1 = c.h1.unaryExpr(&gelu);
  c.h2 = p.w2 * c.a1 + p.b2;
  c.a2 = c.h2.unaryExpr(&gelu);
  c.output = sigmoid(p.w3.dot(c.a2) + p.b3);
  return c;
}

// Accumulates dLoss/dParams for one sample given dLoss/dOutput.
void backward(const RegressorParams& p, const TokenSequence& tokens,
              const ForwardCache& c, double d_output, RegressorParams& g) {
  const double d_logit = d_output * c.output * (1.0 - c.output);
  g.w3 += d_logit * c.a2;
  g.b3 += d_logit;
  const Eigen::VectorXd d_h2 =
      (d_logit * p.w3).cwiseProduct(c.h2.unaryExpr(&gelu_grad));
  g.w2.noalias() += d_h2 * c.a1.transpose();
  g.b2 += d_h2;
  const Eigen::VectorXd d_h1 =
      (p.w2.transpose() * d_h2).cwiseProduct(c.h1.unaryExpr(&gelu_grad));
  g.w1.noalias() += d_h1 * c.pooled.transpose();
  g.b1 += d_h1;
  const Eigen::VectorXd d_pooled = p.w1.transpose() * d_h1;

  const double n = static_cast<double>(tokens.ids.size());
  const Eigen::VectorXd d_y = d_pooled / n;  // same for every token
  g.ln_bias += d_pooled;
  const Eigen::VectorXd d_xhat = d_y.cwiseProduct(p.ln_gain);
  const double e = static_cast<double>(p.dims.embed_dim);
  for (std::size_t i = 0; i < tokens.ids.size(); ++i) {
    const auto& xhat = c.normalized[i];
    g.ln_gain += d_y.cwiseProduct(xhat);
    const double mean_d = d_xhat.sum() / e;
    const double mean_dx = d_xhat.dot(xhat) / e;
    const Eigen::VectorXd d_x =
        c.inv_std[i] * (d_xhat.array() - mean_d - xhat.array() * mean_dx).matrix();
    g.embedding.row(tokens.ids[i]) += d_x.transpose();
  }
}

// Applies fn(param, grad) to every parameter group as flat spans.
template <typename Fn>
void for_each_group(RegressorParams& p, const RegressorParams& g, Fn&& fn) {
  fn(std::span<double>(p.embedding.data(), p.embedding.size()),
     std::span<const double>(g.embedding.data(), g.embedding.size()), 0);
  fn(std::span<double>(p.ln_gain.data(), p.ln_gain.size()),
     std::span<const double>(g.ln_gain.data(), g.ln_gain.size()), 1);
  fn(std::span<double>(p.ln_bias.data(), p.ln_bias.size()),
     std::span<const double>(g.ln_bias.data(), g.ln_bias.size()), 2);
  fn(std::span<double>(p.w1.data(), p.w1.size()),
     std::span<const double>(g.w1.data(), g.w1.size()), 3);
  fn(std::span<double>(p.b1.data(), p.b1.size()),
     std::span<const double>(g.b1.data(), g.b1.size()), 4);
  fn(std::span<double>(p.w2.data(), p.w2.size()),
     std::span<const double>(g.w2.data(), g.w2.size()), 5);
  fn(std::span<double>(p.b2.data(), p.b2.size()),
     std::span<const double>(g.b2.data(), g.b2.size()), 6);
  fn(std::span<double>(p.w3.data(), p.w3.size()),
     std::span<const double>(g.w3.data(), g.w3.size()), 7);
  fn(std::span<double>(&p.b3, 1), std::span<const double>(&g.b3, 1), 8);
}

class AdamState {
 public:
  explicit AdamState(const RegressorParams& shape) {
    RegressorParams zero = RegressorParams::zeros_like(shape);
    for_each_group(zero, zero, [&](std::span<double> p, std::span<const double>, int) {
      first_.emplace_back(p.size(), 0.0);
      second_.emplace_back(p.size(), 0.0);
    });
  }

  void step(RegressorParams& params, const RegressorParams& grads, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for_each_group(params, grads,
                   [&](std::span<double> p, std::span<const double> g, int group) {
                     auto& m = first_[static_cast<std::size_t>(group)];
                     auto& v = second_[static_cast<std::size_t>(group)];
                     for (std::size_t i = 0; i < p.size(); ++i) {
                       m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
                       v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
                       p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
                     }
                   });
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  int t_ = 0;
};

double dataset_mse(const RegressorParams& params, std::span<const RegressionSample> data) {
  if (data.empty()) return 0.0;
  return regressor_loss(params, data, nullptr);
}

std::vector<double> predictions(const RegressorParams& params,
                                std::span<const RegressionSample> data) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back(regressor_predict(params, s.tokens));
  return out;
}

void attach_test_metrics(TrainReport& report, const RegressorParams& params,
                         std::span<const RegressionSample> test) {
  if (test.empty()) return;
  const auto predicted = predictions(params, test);
  std::vector<double> labels;
  labels.reserve(test.size());
  for (const auto& s : test) labels.push_back(s.label);
  const auto corr = pearson(predicted, labels);
  report.test_r = corr.r;
  report.test_p = corr.p;
  report.test_n = corr.n;
}

}  // namespace

RegressorParams RegressorParams::init(const RegressorDims& dims, std::uint64_t seed) {
  if (dims.vocab_size < 2 || dims.embed_dim < 2 || dims.hidden_dim < 1) {
    throw InvalidArgument("invalid regressor dims");
  }
  Rng rng(seed);
  RegressorParams p;
  p.dims = dims;
  p.seed = seed;
  p.embedding.resize(dims.vocab_size, dims.embed_dim);
  fill_normal(p.embedding, rng, 1.0);
  p.ln_gain = Eigen::VectorXd::Ones(dims.embed_dim);
  p.ln_bias = Eigen::VectorXd::Zero(dims.embed_dim);
  p.w1.resize(dims.hidden_dim, dims.embed_dim);
  fill_normal(p.w1, rng, std::sqrt(2.0 / dims.embed_dim));
  p.b1 = Eigen::VectorXd::Zero(dims.hidden_dim);
  p.w2.resize(dims.hidden_dim, dims.hidden_dim);
  fill_normal(p.w2, rng, std::sqrt(2.0 / dims.hidden_dim));
  p.b2 = Eigen::VectorXd::Zero(dims.hidden_dim);
  p.w3.resize(dims.hidden_dim);
  fill_normal(p.w3, rng, std::sqrt(1.0 / dims.hidden_dim));
  p.b3 = 0.0;
  return p;
}

RegressorParams RegressorParams::zeros_like(const RegressorParams& o) {
  RegressorParams z;
  z.dims = o.dims;
  z.seed = o.seed;
  z.embedding = Eigen::MatrixXd::Zero(o.embedding.rows(), o.embedding.cols());
  z.ln_gain = Eigen::VectorXd::Zero(o.ln_gain.size());
  z.ln_bias = Eigen::VectorXd::Zero(o.ln_bias.size());
  z.w1 = Eigen::MatrixXd::Zero(o.w1.rows(), o.w1.cols());
  z.b1 = Eigen::VectorXd::Zero(o.b1.size());
  z.w2 = Eigen::MatrixXd::Zero(o.w2.rows(), o.w2.cols());
  z.b2 = Eigen::VectorXd::Zero(o.b2.size());
  z.w3 = Eigen::VectorXd::Zero(o.w3.size());
  z.b3 = 0.0;
  return z;
}

void RegressorParams::check_shapes() const {
  const auto& d = dims;
  const bool ok = embedding.rows() == d.vocab_size && embedding.cols() == d.embed_dim &&
                  ln_gain.size() == d.embed_dim && ln_bias.size() == d.embed_dim &&
                  w1.rows() == d.hidden_dim && w1.cols() == d.embed_dim &&
                  b1.size() == d.hidden_dim && w2.rows() == d.hidden_dim &&
                  w2.cols() == d.hidden_dim && b2.size() == d.hidden_dim &&
                  w3.size() == d.hidden_dim;
  if (!ok) throw DimensionMismatch("regressor parameter shapes disagree with dims");
}

bool RegressorParams::all_finite() const {
  return embedding.allFinite() && ln_gain.allFinite() && ln_bias.allFinite() &&
         w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() &&
         w3.allFinite() && std::isfinite(b3);
}

bool RegressorParams::operator==(const RegressorParams& o) const {
  return dims == o.dims && embedding == o.embedding && ln_gain == o.ln_gain &&
         ln_bias == o.ln_bias && w1 == o.w1 && b1 == o.b1 && w2 == o.w2 &&
         b2 == o.b2 && w3 == o.w3 && b3 == o.b3;
}

double regressor_predict(const RegressorParams& params, const TokenSequence& tokens) {
  return forward(params, tokens).output;
}

double regressor_loss(const RegressorParams& params,
                      std::span<const RegressionSample> batch, RegressorParams* grads) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  if (grads) *grads = RegressorParams::zeros_like(params);
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& sample : batch) {
    const auto cache = forward(params, sample.tokens);
    const double err = cache.output - sample.label;
    loss += err * err;
    if (grads) backward(params, sample.tokens, cache, 2.0 * err / n, *grads);
  }
  return loss / n;
}

json report_to_json(const TrainReport& r) {
  json j{{"epochs_run", r.epochs_run},
         {"best_epoch", r.best_epoch},
         {"train_mse", r.train_mse},
         {"val_mse", r.val_mse},
         {"train_history", r.train_history},
         {"val_history", r.val_history},
         {"test_n", r.test_n}};
  j["test_r"] = r.test_r ? json(*r.test_r) : json(nullptr);
  j["test_p"] = r.test_p ? json(*r.test_p) : json(nullptr);
  return j;
}

std::vector<RegressionSample> samples_from_states(std::span<const DependentState> states,
                                                  int vocab_size) {
  std::vector<RegressionSample> out;
  out.reserve(states.size());
  for (const auto& s : states) {
    validate(s);
    out.push_back({tokenize(format_dependent_state(s), vocab_size), s.vulnerability});
  }
  return out;
}

TrainResult train_regressor(std::span<const RegressionSample> train,
                            std::span<const RegressionSample> val,
                            std::span<const RegressionSample> test,
                            const TrainHyper& hyper) {
  if (train.empty()) throw TrainingError("training set is empty");
  if (hyper.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (hyper.epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (!(hyper.learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
  for (const auto& s : train) {
    if (!(s.label >= 0.0 && s.label <= 1.0)) {
      throw TrainingError("training label outside [0,1]");
    }
  }

  RegressorParams params = RegressorParams::init(hyper.dims, hyper.seed);
  const auto monitor = val.empty() ? train : val;

  TrainResult result{params, {}};
  double best = dataset_mse(params, monitor);
  result.report.train_mse = dataset_mse(params, train);
  result.report.val_mse = val.empty() ? 0.0 : best;

  AdamState adam(params);
  Rng shuffler(mix64(hyper.seed ^ 0x73687566666c65ULL));
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<RegressionSample> batch;
  RegressorParams grads;

  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    shuffler.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(hyper.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch_size));
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(train[order[k]]);
      const double loss = regressor_loss(params, batch, &grads);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch starting at " + std::to_string(start) +
                            " (lr " + std::to_string(hyper.learning_rate) + ")");
      }
      if (hyper.optimizer == Optimizer::adam) {
        adam.step(params, grads, hyper.learning_rate);
      } else {
        for_each_group(params, grads,
                       [&](std::span<double> p, std::span<const double> g, int) {
                         for (std::size_t i = 0; i < p.size(); ++i) {
                           p[i] -= hyper.learning_rate * g[i];
                         }
                       });
      }
    }
    if (!params.all_finite()) {
      throw TrainingError("parameters diverged at epoch " + std::to_string(epoch));
    }
    const double train_mse = dataset_mse(params, train);
    const double val_mse = val.empty() ? train_mse : dataset_mse(params, val);
    result.report.train_history.push_back(train_mse);
    result.report.val_history.push_back(val_mse);
    result.report.epochs_run = epoch;
    if (val_mse < best) {
      best = val_mse;
      result.params = params;
      result.report.best_epoch = epoch;
      result.report.train_mse = train_mse;
      result.report.val_mse = val.empty() ? 0.0 : val_mse;
    }
  }
  attach_test_metrics(result.report, result.params, test);
  return result;
}

TrainReport random_controller_baseline(std::span<const RegressionSample> test,
                                       std::uint64_t seed, const RegressorDims& dims) {
  const auto params = RegressorParams::init(dims, seed);
  TrainReport report;
  report.val_mse = dataset_mse(params, test);
  attach_test_metrics(report, params, test);
  return report;
}

FusionParams FusionParams::init(int dim, int hidden_dim, std::uint64_t seed) {
  if (dim < 1 || hidden_dim < 1) throw InvalidArgument("invalid fusion dims");
  Rng rng(seed);
  FusionParams p;
  p.seed = seed;
  p.w1.resize(hidden_dim, 3 * dim);
  fill_normal(p.w1, rng, std::sqrt(2.0 / (3.0 * dim)));
  p.b1 = Eigen::VectorXd::Zero(hidden_dim);
  p.w2.resize(hidden_dim);
  fill_normal(p.w2, rng, std::sqrt(1.0 / hidden_dim));
  return p;
}

double fusion_predict(const FusionParams& p, const Eigen::VectorXd& state_embedding,
                      const FeatureVector& dialogue_features,
                      const Eigen::VectorXd& memory_summary) {
  const auto total = state_embedding.size() + dialogue_features.size() + memory_summary.size();
  if (total != p.w1.cols()) {
    throw DimensionMismatch("fusion controller expects input dim " +
                            std::to_string(p.w1.cols()) + ", got " + std::to_string(total));
  }
  Eigen::VectorXd x(total);
  x << state_embedding, dialogue_features, memory_summary;
  const Eigen::VectorXd hidden = (p.w1 * x + p.b1).cwiseMax(0.0);
  return sigmoid(p.w2.dot(hidden) + p.b2);
}

CareController CareController::token_regressor(RegressorParams params, bool trained) {
  params.check_shapes();
  CareController c;
  c.variant_ = CareVariant::token_regressor;
  c.trained_ = trained;
  c.regressor_ = std::move(params);
  return c;
}

CareController CareController::fusion(FusionParams params,
                                      std::shared_ptr<const StateEncoder> encoder) {
  if (!encoder) throw InvalidArgument("fusion controller needs a state encoder");
  if (params.input_dim() != 3 * encoder->dim()) {
    throw DimensionMismatch("fusion params expect dim " +
                            std::to_string(params.input_dim() / 3) +
                            ", encoder has " + std::to_string(encoder->dim()));
  }
  CareController c;
  c.variant_ = CareVariant::fusion;
  c.trained_ = false;
  c.fusion_ = std::move(params);
  c.encoder_ = std::move(encoder);
  return c;
}

const RegressorParams& CareController::regressor() const {
  if (!regressor_) throw InvalidArgument("controller is not a token regressor");
  return *regressor_;
}

CareSignal CareController::predict(const DependentState& state, const DialogueContext& ctx,
                                   const MemoryBank& bank) const {
  if (variant_ == CareVariant::token_regressor) {
    const auto tokens = tokenize(format_dependent_state(state), regressor_->dims.vocab_size);
    return CareSignal{regressor_predict(*regressor_, tokens)};
  }
  const auto dim = encoder_->dim();
  const auto z = encoder_->encode(state);
  const auto psi = featurize(ctx.dialogue_text(), dim);
  const auto rho = bank.retrieve(psi);
  return CareSignal{fusion_predict(*fusion_, z, psi, rho.values)};
}

void CareController::save(const std::filesystem::path& path) const {
  json j{{"kind", "care_controller"},
         {"variant", to_string(variant_)},
         {"trained", trained_}};
  if (regressor_) {
    const auto& p = *regressor_;
    j["dims"] = {{"vocab_size", p.dims.vocab_size},
                 {"embed_dim", p.dims.embed_dim},
                 {"hidden_dim", p.dims.hidden_dim}};
    j["vocab_size"] = p.dims.vocab_size;
    j["seed"] = p.seed;
    j["weights"] = {{"embedding", matrix_to_json(p.embedding)},
                    {"ln_gain", vector_to_json(p.ln_gain)},
                    {"ln_bias", vector_to_json(p.ln_bias)},
                    {"w1", matrix_to_json(p.w1)},
                    {"b1", vector_to_json(p.b1)},
                    {"w2", matrix_to_json(p.w2)},
                    {"b2", vector_to_json(p.b2)},
                    {"w3", vector_to_json(p.w3)},
                    {"b3", p.b3}};
  } else {
    const auto& p = *fusion_;
    j["dims"] = {{"input_dim", p.input_dim()}, {"hidden_dim", p.w1.rows()}};
    j["vocab_size"] = kDefaultVocabSize;
    j["seed"] = p.seed;
    j["weights"] = {{"w1", matrix_to_json(p.w1)},
                    {"b1", vector_to_json(p.b1)},
                    {"w2", vector_to_json(p.w2)},
                    {"b2", p.b2}};
  }
  write_json_file(path, j, -1);
}

CareController CareController::load(const std::filesystem::path& path,
                                    std::shared_ptr<const StateEncoder> encoder) {
  const json j = read_json_file(path);
  if (j.value("kind", "") != "care_controller") {
    throw DataError(path.string() + " is not a care controller parameter file");
  }
  try {
    const auto variant = parse_care_variant(j.at("variant").get<std::string>());
    const auto& w = j.at("weights");
    const auto& dims = j.at("dims");
    if (variant == CareVariant::token_regressor) {
      RegressorParams p;
      p.dims.vocab_size = dims.at("vocab_size").get<int>();
      p.dims.embed_dim = dims.at("embed_dim").get<int>();
      p.dims.hidden_dim = dims.at("hidden_dim").get<int>();
      p.seed = j.value("seed", std::uint64_t{0});
      p.embedding = matrix_from_json(w.at("embedding"));
      p.ln_gain = vector_from_json(w.at("ln_gain"));
      p.ln_bias = vector_from_json(w.at("ln_bias"));
      p.w1 = matrix_from_json(w.at("w1"));
      p.b1 = vector_from_json(w.at("b1"));
      p.w2 = matrix_from_json(w.at("w2"));
      p.b2 = vector_from_json(w.at("b2"));
      p.w3 = vector_from_json(w.at("w3"));
      p.b3 = w.at("b3").get<double>();
      return token_regressor(std::move(p), j.value("trained", false));
    }
    FusionParams p;
    p.seed = j.value("seed", std::uint64_t{0});
    p.w1 = matrix_from_json(w.at("w1"));
    p.b1 = vector_from_json(w.at("b1"));
    p.w2 = vector_from_json(w.at("w2"));
    p.b2 = w.at("b2").get<double>();
    if (p.w1.cols() != dims.at("input_dim").get<Eigen::Index>() ||
        p.b1.size() != p.w1.rows() || p.w2.size() != p.w1.rows()) {
      throw DimensionMismatch("fusion weights disagree with dims header");
    }
    return fusion(std::move(p), std::move(encoder));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace ccn
