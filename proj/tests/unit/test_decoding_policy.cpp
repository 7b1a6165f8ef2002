#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "ccn/decoding_policy.hpp"
#include "ccn/errors.hpp"

using namespace ccn;

TEST(DecodingPolicy, TabulatedPointsExact) {
  EXPECT_EQ(care_to_decoding({0.0}), (DecodingParams{0.90, 0.95}));
  EXPECT_EQ(care_to_decoding({0.5}), (DecodingParams{0.70, 0.89}));
  EXPECT_EQ(care_to_decoding({1.0}), (DecodingParams{0.50, 0.83}));
}

TEST(DecodingPolicy, AffineOverUnitInterval) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double m = u(gen);
    const auto p = care_to_decoding({m});
    EXPECT_NEAR(p.temperature, 0.90 - 0.40 * m, 1e-12);
    EXPECT_NEAR(p.top_p, 0.95 - 0.12 * m, 1e-12);
  }
}

TEST(DecodingPolicy, RejectsOutOfRangeCare) {
  EXPECT_THROW(care_to_decoding({-0.01}), OutOfRange);
  EXPECT_THROW(care_to_decoding({1.01}), OutOfRange);
  EXPECT_THROW(care_to_decoding({std::nan("")}), OutOfRange);
}

TEST(DecodingPolicy, PlanOrderAndParams) {
  const auto plan = candidate_plan({0.5});
  ASSERT_EQ(plan.size(), 5u);
  const std::vector<CandidateLabel> order{CandidateLabel::greedy, CandidateLabel::sampled1,
                                          CandidateLabel::sampled2, CandidateLabel::sampled3,
                                          CandidateLabel::ccn};
  for (std::size_t i = 0; i < plan.size(); ++i) EXPECT_EQ(plan[i].label, order[i]);
  EXPECT_EQ(plan[0].params, (DecodingParams{0.20, 0.75}));
  EXPECT_EQ(plan[1].params, (DecodingParams{0.55, 0.80}));
  EXPECT_EQ(plan[2].params, (DecodingParams{0.80, 0.92}));
  EXPECT_EQ(plan[3].params, (DecodingParams{1.05, 0.98}));
  EXPECT_EQ(plan[4].params, (DecodingParams{0.70, 0.89}));
  for (const auto& e : plan) {
    EXPECT_GE(e.params.temperature, 0.2);
    EXPECT_LE(e.params.temperature, 1.05);
  }
}

TEST(DecodingPolicy, Overrides) {
  const std::vector<PlanEntry> overrides{{CandidateLabel::sampled2, {0.6, 0.9}}};
  const auto plan = candidate_plan({0.0}, overrides);
  EXPECT_EQ(plan[2].params, (DecodingParams{0.6, 0.9}));
  EXPECT_EQ(plan[1].params, (DecodingParams{0.55, 0.80}));
  EXPECT_THROW(baseline_decoding(CandidateLabel::ccn), InvalidArgument);
}
