#include <gtest/gtest.h>

#include <random>

#include "ccn/benchmark.hpp"
#include "ccn/care_controller.hpp"
#include "ccn/errors.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

using namespace ccn;
using ccn::testing::TempDir;

namespace {

RegressorParams perturbed_params(std::uint64_t seed, const RegressorDims& dims = {}) {
  auto p = RegressorParams::init(dims, seed);
  std::mt19937_64 gen(seed + 100);
  std::normal_distribution<double> d(0.0, 0.1);
  for (Eigen::Index i = 0; i < p.ln_gain.size(); ++i) {
    p.ln_gain[i] += d(gen);
    p.ln_bias[i] += d(gen);
  }
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) {
    p.b1[i] += d(gen);
    p.b2[i] += d(gen);
  }
  p.b3 += d(gen);
  return p;
}

// Label is 0.9 when the text contains "alpha", else 0.1.
std::vector<RegressionSample> separable_set(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const std::vector<std::string> filler{"river", "stone", "lamp", "window", "cloud", "paper",
                                        "green", "quiet", "north", "table"};
  std::uniform_int_distribution<std::size_t> pick(0, filler.size() - 1);
  std::vector<RegressionSample> out;
  for (int i = 0; i < n; ++i) {
    const bool positive = i % 2 == 0;
    std::string text = positive ? "alpha" : "beta";
    for (int k = 0; k < 4; ++k) text += " " + filler[pick(gen)];
    out.push_back({tokenize(text), positive ? 0.9 : 0.1});
  }
  return out;
}

}  // namespace

TEST(CareController, PredictionInOpenUnitInterval) {
  const auto p = RegressorParams::init({}, 1);
  for (const char* text : {"", "a", "vulnerability 0.99 panic alone", "x y z w v u"}) {
    const double m = regressor_predict(p, tokenize(text));
    EXPECT_GT(m, 0.0);
    EXPECT_LT(m, 1.0);
  }
}

TEST(CareController, GradientsMatchFiniteDifferences) {
  const auto params = perturbed_params(5);
  const auto examples = generate_benchmark(3, 12);
  std::vector<DependentState> states;
  for (int i = 0; i < 5; ++i) states.push_back(examples[static_cast<std::size_t>(i)].state);
  const auto batch = samples_from_states(states);
  for (const auto& g : ccn::testing::check_regressor_gradients(params, batch)) {
    EXPECT_LT(g.relative_error, 1e-4) << g.name;
    EXPECT_GT(g.checked, 0) << g.name;
  }
}

TEST(CareController, LossMatchesMeanSquaredError) {
  const auto p = RegressorParams::init({}, 2);
  const std::vector<RegressionSample> batch{{tokenize("one two"), 0.2}, {tokenize("three"), 0.7}};
  const double a = regressor_predict(p, batch[0].tokens) - 0.2;
  const double b = regressor_predict(p, batch[1].tokens) - 0.7;
  EXPECT_NEAR(regressor_loss(p, batch, nullptr), (a * a + b * b) / 2.0, 1e-15);
}

TEST(CareController, SeparableSetIsLearned) {
  const auto train = separable_set(200, 1);
  const auto val = separable_set(60, 2);
  TrainHyper hyper;
  hyper.seed = 4;
  const auto result = train_regressor(train, val, {}, hyper);
  EXPECT_LT(result.report.val_mse, 0.01);
}

TEST(CareController, FullBatchSgdLossNonIncreasing) {
  const auto train = separable_set(64, 3);
  TrainHyper hyper;
  hyper.optimizer = Optimizer::sgd;
  hyper.learning_rate = 0.05;
  hyper.batch_size = static_cast<int>(train.size());
  hyper.epochs = 30;
  hyper.seed = 8;
  const auto result = train_regressor(train, {}, {}, hyper);
  const auto& h = result.report.train_history;
  ASSERT_EQ(h.size(), 30u);
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1] + 1e-6) << "epoch " << i + 1;
  EXPECT_LT(h.back(), h.front());
}

TEST(CareController, ZeroEpochsReturnsInit) {
  const auto train = separable_set(10, 5);
  TrainHyper hyper;
  hyper.epochs = 0;
  hyper.seed = 77;
  const auto result = train_regressor(train, train, {}, hyper);
  EXPECT_TRUE(result.params == RegressorParams::init({}, 77));
  EXPECT_EQ(result.report.epochs_run, 0);
  EXPECT_EQ(result.report.best_epoch, 0);
}

TEST(CareController, TrainingErrors) {
  TrainHyper hyper;
  EXPECT_THROW(train_regressor({}, {}, {}, hyper), TrainingError);
  std::vector<RegressionSample> bad{{tokenize("x"), 1.5}};
  EXPECT_THROW(train_regressor(bad, {}, {}, hyper), TrainingError);
  const auto ok = separable_set(4, 1);
  hyper.learning_rate = 1e300;  // overflows the parameters
  hyper.optimizer = Optimizer::sgd;
  EXPECT_THROW(train_regressor(ok, {}, {}, hyper), TrainingError);
}

TEST(CareController, RandomBaselineDeterministic) {
  const auto examples = generate_benchmark(1, 120);
  std::vector<DependentState> states;
  for (const auto& e : examples) states.push_back(e.state);
  const auto samples = samples_from_states(states);
  const auto a = random_controller_baseline(samples, 9);
  const auto b = random_controller_baseline(samples, 9);
  ASSERT_TRUE(a.test_r.has_value());
  EXPECT_EQ(*a.test_r, *b.test_r);
  EXPECT_EQ(a.test_n, 120);
}

TEST(CareController, RandomBaselineCentredOverSeeds) {
  const auto all = assign_splits(generate_benchmark(1), 1);
  std::vector<DependentState> states;
  for (const auto& e : filter_split(all, Split::test)) states.push_back(e.state);
  const auto samples = samples_from_states(states);
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    sum += *random_controller_baseline(samples, seed).test_r;
  }
  EXPECT_LE(std::abs(sum / 10.0), 0.1);
}

TEST(CareController, TrainedModelOrdersVulnerability) {
  const auto all = assign_splits(generate_benchmark(1, 2000), 1);
  auto states_of = [](const std::vector<BenchmarkExample>& ex) {
    std::vector<DependentState> s;
    for (const auto& e : ex) s.push_back(e.state);
    return samples_from_states(s);
  };
  const auto train = states_of(filter_split(all, Split::train));
  const auto val = states_of(filter_split(all, Split::val));
  TrainHyper hyper;
  hyper.seed = 0;
  const auto result = train_regressor(train, val, {}, hyper);
  const auto controller = CareController::token_regressor(result.params, true);

  // 50 generated states, each evaluated at vulnerability 0.9 and 0.1.
  MemoryBank bank(16, 128);
  const DialogueContext ctx{{{Role::user, "hello"}}, {}};
  double high = 0.0, low = 0.0;
  for (int i = 0; i < 50; ++i) {
    auto s = all[static_cast<std::size_t>(i * 37)].state;
    s.vulnerability = 0.9;
    high += controller.predict(s, ctx, bank).value;
    s.vulnerability = 0.1;
    low += controller.predict(s, ctx, bank).value;
  }
  EXPECT_GT(high / 50.0, low / 50.0);
}

TEST(CareController, SaveLoadRoundTrip) {
  TempDir dir;
  const auto c = CareController::token_regressor(perturbed_params(3), true);
  c.save(dir / "c.json");
  const auto back = CareController::load(dir / "c.json");
  EXPECT_TRUE(back.trained());
  EXPECT_EQ(back.variant(), CareVariant::token_regressor);
  EXPECT_TRUE(back.regressor() == c.regressor());
}

TEST(CareController, LoadRejectsForeignFiles) {
  TempDir dir;
  write_json_file(dir / "x.json", json{{"kind", "other"}});
  EXPECT_THROW(CareController::load(dir / "x.json"), DataError);
  EXPECT_THROW(CareController::load(dir / "missing.json"), DataError);
}

TEST(CareController, FusionVariant) {
  auto encoder = std::make_shared<const StateEncoder>(StateEncoder::seeded(128, 42));
  const auto c = CareController::fusion(FusionParams::init(128, 128, 1), encoder);
  MemoryBank bank(16, 128);
  const auto m1 = c.predict(ccn::testing::student_state(), ccn::testing::student_context(), bank);
  const auto m2 = c.predict(ccn::testing::student_state(), ccn::testing::student_context(), bank);
  EXPECT_GT(m1.value, 0.0);
  EXPECT_LT(m1.value, 1.0);
  EXPECT_EQ(m1.value, m2.value);

  TempDir dir;
  c.save(dir / "f.json");
  const auto back = CareController::load(dir / "f.json", encoder);
  EXPECT_EQ(back.variant(), CareVariant::fusion);
  EXPECT_EQ(back.predict(ccn::testing::student_state(), ccn::testing::student_context(), bank).value,
            m1.value);
  EXPECT_THROW(fusion_predict(FusionParams::init(128, 8, 1), Eigen::VectorXd::Zero(4),
                              Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4)),
               DimensionMismatch);
}
