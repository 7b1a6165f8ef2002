#include <gtest/gtest.h>

#include <random>

#include "ccn/errors.hpp"
#include "ccn/evaluators.hpp"
#include "ccn/selector.hpp"
#include "test_support.hpp"

using namespace ccn;
using ccn::testing::scored;

namespace {

const std::vector<CandidateLabel> kLabels{CandidateLabel::greedy, CandidateLabel::sampled1,
                                          CandidateLabel::sampled2, CandidateLabel::sampled3,
                                          CandidateLabel::ccn};

}  // namespace

TEST(Selector, PicksFeasibleArgmax) {
  // kappa(0.5) = 0.7: risk 0.75 is infeasible.
  const std::vector<CandidateResponse> c{
      scored(CandidateLabel::greedy, {5, 4, 1, 5}),    // best utility, risk 0.75
      scored(CandidateLabel::sampled1, {4, 2, 1, 3}),  // risk 0.25
      scored(CandidateLabel::ccn, {3, 2, 2, 3}),
  };
  const auto t = select(c, {0.5}, PipelineConfig{});
  EXPECT_EQ(t.chosen_label, CandidateLabel::sampled1);
  EXPECT_FALSE(t.constraint_relaxed);
  EXPECT_EQ(t.feasible_labels,
            (std::vector<CandidateLabel>{CandidateLabel::sampled1, CandidateLabel::ccn}));
  EXPECT_NEAR(t.kappa, 0.7, 1e-15);
}

TEST(Selector, FallbackToLowestRisk) {
  const std::vector<CandidateResponse> c{
      scored(CandidateLabel::greedy, {5, 5, 1, 5}),
      scored(CandidateLabel::sampled1, {1, 4.5, 1, 1}),
  };
  const auto t = select(c, {1.0}, PipelineConfig{});
  EXPECT_TRUE(t.constraint_relaxed);
  EXPECT_EQ(t.chosen_label, CandidateLabel::sampled1);
  EXPECT_TRUE(t.feasible_labels.empty());
}

TEST(Selector, TiesBreakByPlanOrder) {
  const std::vector<CandidateResponse> c{
      scored(CandidateLabel::ccn, {4, 2, 1, 3}, "same"),
      scored(CandidateLabel::sampled2, {4, 2, 1, 3}, "same"),
  };
  EXPECT_EQ(select(c, {0.2}, PipelineConfig{}).chosen_label, CandidateLabel::sampled2);
}

TEST(Selector, RiskBoundaryIsFeasible) {
  // risk exactly 0.5 with kappa(1) = 0.5.
  const std::vector<CandidateResponse> c{scored(CandidateLabel::greedy, {3, 3, 3, 3})};
  const auto t = select(c, {1.0}, PipelineConfig{});
  EXPECT_FALSE(t.constraint_relaxed);
}

TEST(Selector, Errors) {
  EXPECT_THROW(select({}, {0.5}, PipelineConfig{}), InvalidArgument);
  std::vector<CandidateResponse> c(1);
  EXPECT_THROW(select(c, {0.5}, PipelineConfig{}), InvalidArgument);
}

TEST(Selector, RandomizedInvariants) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<CandidateResponse> c;
    for (auto label : kLabels) {
      if (u(gen) < 0.3) continue;
      c.push_back(scored(label, ccn::testing::random_scores(gen)));
    }
    if (c.empty()) continue;
    const double m = u(gen);
    const auto t = select(c, {m}, PipelineConfig{});
    const double k = 0.9 - 0.4 * m;
    const auto& chosen = t.chosen();
    bool any_feasible = false;
    for (const auto& x : c) any_feasible |= *x.risk <= k;
    EXPECT_EQ(t.constraint_relaxed, !any_feasible);
    for (const auto& x : c) {
      if (any_feasible && *x.risk <= k) EXPECT_GE(*chosen.utility, *x.utility);
      if (!any_feasible) EXPECT_LE(*chosen.risk, *x.risk);
    }
    if (!t.constraint_relaxed) EXPECT_LE(*chosen.risk, k);
  }
}
