#include <gtest/gtest.h>

#include <random>

#include "ccn/eval_harness.hpp"
#include "test_support.hpp"

using namespace ccn;
using ccn::testing::scored;

namespace {

EvalRecord record(const std::string& id, const std::string& system, CandidateLabel label,
                  AxisScores s, const std::string& text) {
  EvalRecord r;
  r.example_id = id;
  r.system = system;
  r.category = "manipulative_care";
  SelectionTrace t;
  t.candidates.push_back(scored(label, s, text));
  t.chosen_label = label;
  t.feasible_labels = {label};
  r.trace = t;
  return r;
}

EvalRecord failed(const std::string& id, const std::string& system) {
  EvalRecord r;
  r.example_id = id;
  r.system = system;
  r.error = "timeout: injected";
  return r;
}

const std::vector<BenchmarkExample>& small_test_split() {
  static const auto examples = [] {
    auto all = assign_splits(generate_benchmark(1, 300), 1, default_split_sizes(300));
    return filter_split(all, Split::test);
  }();
  return examples;
}

}  // namespace

TEST(EvalHarness, SystemNames) {
  for (auto s : {System::baseline_greedy, System::ccn_candidate_only, System::reranked_full,
                 System::reranked_no_care}) {
    EXPECT_EQ(parse_system(to_string(s)), s);
  }
  EXPECT_THROW(parse_system("best"), InvalidArgument);
}

TEST(WinRate, HandCountedCases) {
  const AxisScores lo{2, 3, 3, 3}, hi{4, 2, 1, 4};
  std::vector<EvalRecord> a{record("1", "a", CandidateLabel::greedy, lo, "p"),
                            record("2", "a", CandidateLabel::greedy, hi, "q"),
                            record("3", "a", CandidateLabel::greedy, lo, "same"),
                            record("4", "a", CandidateLabel::greedy, lo, "r"),
                            failed("5", "a")};
  std::vector<EvalRecord> b{record("2", "b", CandidateLabel::ccn, lo, "s"),  // loss
                            record("1", "b", CandidateLabel::ccn, hi, "t"),  // win
                            record("3", "b", CandidateLabel::greedy, hi, "same"),  // tie by text
                            record("4", "b", CandidateLabel::sampled1, lo, "u"),  // tie by utility
                            record("5", "b", CandidateLabel::ccn, hi, "v")};  // dropped
  const auto w = win_rate(a, b);
  EXPECT_EQ(w.wins, 1);
  EXPECT_EQ(w.losses, 1);
  EXPECT_EQ(w.ties, 2);
  EXPECT_EQ(w.n, 4);
  EXPECT_EQ(w.ccn_selected, 2);
}

TEST(WinRate, MismatchedSetsThrow) {
  const AxisScores s{3, 3, 3, 3};
  std::vector<EvalRecord> a{record("1", "a", CandidateLabel::greedy, s, "x")};
  std::vector<EvalRecord> b{record("2", "b", CandidateLabel::greedy, s, "x")};
  EXPECT_THROW(win_rate(a, b), InvalidArgument);
  std::vector<EvalRecord> two{record("1", "b", CandidateLabel::greedy, s, "x"),
                              record("2", "b", CandidateLabel::greedy, s, "x")};
  EXPECT_THROW(win_rate(a, two), InvalidArgument);
}

TEST(WinRate, RandomAgainstIndependentCount) {
  std::mt19937_64 gen(21);
  std::vector<EvalRecord> a, b;
  int wins = 0, losses = 0, ties = 0;
  for (int i = 0; i < 300; ++i) {
    const auto sa = ccn::testing::random_scores(gen);
    const auto sb = (i % 7 == 0) ? sa : ccn::testing::random_scores(gen);
    const std::string id = std::to_string(i);
    a.push_back(record(id, "a", CandidateLabel::greedy, sa, "aa"));
    b.push_back(record(id, "b", CandidateLabel::sampled2, sb, i % 7 == 0 ? "aa" : "bb"));
    const double du = b.back().utility() - a.back().utility();
    if (i % 7 == 0) {
      ++ties;
    } else if (du > 0) {
      ++wins;
    } else {
      ++losses;
    }
  }
  const auto w = win_rate(a, b);
  EXPECT_EQ(w.wins, wins);
  EXPECT_EQ(w.losses, losses);
  EXPECT_EQ(w.ties, ties);
  EXPECT_EQ(w.n, 300);
}

TEST(Summarize, MeansDeltaAndDir) {
  std::mt19937_64 gen(22);
  std::vector<EvalRecord> base, other;
  double sum_base = 0, sum_other = 0;
  int inflated = 0;
  for (int i = 0; i < 50; ++i) {
    const auto sa = ccn::testing::random_scores(gen);
    const auto sb = ccn::testing::random_scores(gen);
    base.push_back(record(std::to_string(i), "baseline_greedy", CandidateLabel::greedy, sa, "a"));
    other.push_back(record(std::to_string(i), "x", CandidateLabel::ccn, sb, "b"));
    sum_base += base.back().utility();
    sum_other += other.back().utility();
    inflated += sb.dependency >= 3.5 ? 1 : 0;
  }
  other.push_back(failed("50", "x"));
  base.push_back(record("50", "baseline_greedy", CandidateLabel::greedy, {3, 3, 3, 3}, "a"));
  sum_base += base.back().utility();

  // Baseline listed second still anchors the deltas.
  const std::vector<SystemRecords> systems{{"x", other}, {"baseline_greedy", base}};
  const auto report = summarize(systems);
  ASSERT_EQ(report.systems.size(), 2u);
  const auto& sx = report.systems[0];
  const auto& sb = report.systems[1];
  EXPECT_EQ(sx.n, 50);
  EXPECT_EQ(sx.failures, 1);
  EXPECT_NEAR(sb.mean_utility, sum_base / 51, 1e-9);
  EXPECT_NEAR(sx.mean_utility, sum_other / 50, 1e-9);
  ASSERT_TRUE(sx.delta_vs_baseline.has_value());
  EXPECT_NEAR(*sx.delta_vs_baseline, sum_other / 50 - sum_base / 51, 1e-9);
  EXPECT_FALSE(sb.delta_vs_baseline.has_value());
  EXPECT_NEAR(sx.dir, inflated / 50.0, 1e-12);
  EXPECT_EQ(sx.ccn_selected, 50);
  ASSERT_EQ(report.comparisons.size(), 1u);
  EXPECT_EQ(report.comparisons[0].baseline, "baseline_greedy");
  EXPECT_EQ(report.comparisons[0].result.n, 50);
}

TEST(Summarize, SingleSystemHasNoDelta) {
  std::vector<EvalRecord> only{record("1", "x", CandidateLabel::greedy, {3, 3, 3, 3}, "a")};
  const std::vector<SystemRecords> systems{{"x", only}};
  const auto report = summarize(systems);
  EXPECT_FALSE(report.systems[0].delta_vs_baseline.has_value());
  EXPECT_TRUE(report.comparisons.empty());
  EXPECT_NE(format_table(report).find("x"), std::string::npos);
  const std::vector<SystemRecords> none{{"x", {failed("1", "x")}}};
  EXPECT_THROW(summarize(none), InvalidArgument);
}

TEST(Summarize, OutputFormats) {
  std::vector<EvalRecord> base{record("1", "baseline_greedy", CandidateLabel::greedy,
                                      {3, 3, 3, 3}, "a")};
  std::vector<EvalRecord> full{record("1", "reranked_full", CandidateLabel::ccn,
                                      {4, 2, 1, 4}, "b")};
  const std::vector<SystemRecords> systems{{"baseline_greedy", base}, {"reranked_full", full}};
  const auto report = summarize(systems);
  const auto csv = to_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "system,n,failures,mean_utility,delta_vs_baseline,autonomy,dependency,coercion,"
            "support,dir,ccn_selected");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const auto plot = plot_csv(systems);
  EXPECT_EQ(std::count(plot.begin(), plot.end(), '\n'), 3);
  const auto j = to_json(report);
  EXPECT_EQ(j["comparisons"][0]["wins"], 1);
  EXPECT_NE(format_table(report).find("1 wins"), std::string::npos);
}

TEST(Records, RoundTrip) {
  ccn::testing::TempDir dir;
  std::vector<EvalRecord> recs{
      record("1", "reranked_full", CandidateLabel::ccn, {4, 2, 1, 4}, "b"), failed("2", "x")};
  write_records(recs, dir / "r.jsonl");
  const auto back = read_records(dir / "r.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(back[0].ok());
  EXPECT_EQ(back[0].chosen().label, CandidateLabel::ccn);
  EXPECT_DOUBLE_EQ(back[0].utility(), recs[0].utility());
  EXPECT_FALSE(back[1].ok());
  EXPECT_EQ(back[1].error, recs[1].error);
}

TEST(RunSystem, CandidateSetsAndOrder) {
  const auto& ex = small_test_split();
  const auto pipeline = ccn::testing::mock_pipeline();
  const auto greedy = run_system(System::baseline_greedy, ex, *pipeline);
  const auto only = run_system(System::ccn_candidate_only, ex, *pipeline);
  const auto full = run_system(System::reranked_full, ex, *pipeline);
  const auto no_care = run_system(System::reranked_no_care, ex, *pipeline);
  ASSERT_EQ(full.size(), ex.size());
  for (std::size_t i = 0; i < ex.size(); ++i) {
    EXPECT_EQ(full[i].example_id, ex[i].id);
    ASSERT_TRUE(full[i].ok());
    EXPECT_EQ(greedy[i].trace->candidates.size(), 1u);
    EXPECT_EQ(greedy[i].chosen().label, CandidateLabel::greedy);
    ASSERT_EQ(only[i].trace->candidates.size(), 1u);
    EXPECT_EQ(only[i].chosen().label, CandidateLabel::ccn);
    EXPECT_EQ(full[i].trace->candidates.size(), 5u);
    EXPECT_EQ(no_care[i].trace->candidates.size(), 4u);
    for (const auto& c : no_care[i].trace->candidates) EXPECT_NE(c.label, CandidateLabel::ccn);
    // Shared candidates are identical across systems.
    EXPECT_EQ(full[i].trace->candidates[0].text, greedy[i].chosen().text);
    EXPECT_EQ(full[i].trace->candidates[4].text, only[i].chosen().text);
  }
}

TEST(RunSystem, DeterministicAcrossJobCounts) {
  const auto& ex = small_test_split();
  const auto pipeline = ccn::testing::mock_pipeline();
  const auto one = run_system(System::reranked_full, ex, *pipeline, {1, 7});
  const auto four = run_system(System::reranked_full, ex, *pipeline, {4, 7});
  for (std::size_t i = 0; i < ex.size(); ++i) {
    EXPECT_EQ(json(one[i]).dump(), json(four[i]).dump());
  }
  EXPECT_THROW(run_system(System::reranked_full, ex, *pipeline, {0, 7}), InvalidArgument);
}

TEST(RunSystem, SelectorDominatesGreedyWhenFeasible) {
  const auto& ex = small_test_split();
  const auto pipeline = ccn::testing::mock_pipeline();
  const auto greedy = run_system(System::baseline_greedy, ex, *pipeline);
  const auto full = run_system(System::reranked_full, ex, *pipeline);
  double sum_g = 0, sum_f = 0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const auto& t = *full[i].trace;
    const bool greedy_feasible =
        std::find(t.feasible_labels.begin(), t.feasible_labels.end(), CandidateLabel::greedy) !=
        t.feasible_labels.end();
    if (greedy_feasible) EXPECT_GE(full[i].utility(), greedy[i].utility() - 1e-12);
    sum_g += greedy[i].utility();
    sum_f += full[i].utility();
  }
  EXPECT_GT(sum_f, sum_g);
}

TEST(RunSystem, PartialFailuresAreRecorded) {
  const auto& ex = small_test_split();
  ASSERT_GE(ex.size(), 20u);
  // Every generation fails, so every example fails and the run aborts.
  auto dead = std::make_shared<ccn::testing::FailingBackend>(std::make_shared<MockBackend>(),
                                                             std::set<double>{}, true);
  const auto pipeline = ccn::testing::mock_pipeline(dead);
  EXPECT_THROW(run_system(System::baseline_greedy, ex, *pipeline), EvalAborted);
  EvalOptions lenient;
  lenient.max_failure_fraction = 1.0;
  const auto recs = run_system(System::baseline_greedy, ex, *pipeline, lenient);
  for (const auto& r : recs) {
    EXPECT_FALSE(r.ok());
    ASSERT_TRUE(r.error.has_value());
    EXPECT_EQ(r.error->rfind("all_failed", 0), 0u) << *r.error;
  }
  // Losing one candidate still yields a record.
  auto flaky = std::make_shared<ccn::testing::FailingBackend>(std::make_shared<MockBackend>(),
                                                              std::set<double>{0.55});
  const auto ok = run_system(System::reranked_full, ex, *ccn::testing::mock_pipeline(flaky));
  for (const auto& r : ok) {
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r.trace->candidates.size(), 4u);
  }
}
