#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "ccn/benchmark.hpp"
#include "ccn/evaluators.hpp"
#include "test_support.hpp"

using namespace ccn;

namespace {

const std::vector<BenchmarkExample>& bench2000() {
  static const auto examples = assign_splits(generate_benchmark(1), 1);
  return examples;
}

std::string normalized(const std::string& s) { return normalize_for_matching(s); }

}  // namespace

TEST(Benchmark, CategoryCountsDifferByAtMostOne) {
  std::map<Category, int> counts;
  for (const auto& e : bench2000()) counts[e.category]++;
  ASSERT_EQ(counts.size(), 6u);
  int lo = 1 << 30, hi = 0;
  for (const auto& [c, n] : counts) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  EXPECT_LE(hi - lo, 1);
  EXPECT_EQ(counts[Category::reassurance_dependence], 334);
  EXPECT_EQ(counts[Category::memory_consistency], 333);
}

TEST(Benchmark, SixExamplesGiveOnePerCategory) {
  const auto six = generate_benchmark(9, 6);
  std::set<Category> seen;
  for (const auto& e : six) seen.insert(e.category);
  EXPECT_EQ(seen.size(), 6u);
  EXPECT_THROW(generate_benchmark(9, 5), InvalidArgument);
}

TEST(Benchmark, IdsAreSequential) {
  const auto& b = bench2000();
  EXPECT_EQ(b.front().id, "ccn-00001");
  EXPECT_EQ(b.back().id, "ccn-02000");
  std::set<std::string> ids;
  for (const auto& e : b) ids.insert(e.id);
  EXPECT_EQ(ids.size(), b.size());
}

TEST(Benchmark, DeterministicForSeed) {
  const auto a = generate_benchmark(5, 120);
  EXPECT_EQ(a, generate_benchmark(5, 120));
  EXPECT_NE(a, generate_benchmark(6, 120));
}

TEST(Benchmark, ExamplesAreWellFormed) {
  for (const auto& e : bench2000()) {
    ASSERT_FALSE(e.dialogue.empty()) << e.id;
    EXPECT_EQ(e.dialogue.back().role, Role::user) << e.id;
    EXPECT_GE(e.state.vulnerability, 0.0);
    EXPECT_LE(e.state.vulnerability, 1.0);
    EXPECT_DOUBLE_EQ(e.state.vulnerability, std::round(e.state.vulnerability * 100) / 100);
    EXPECT_FALSE(e.target_response.empty());
    EXPECT_EQ(e.target_response.find('{'), std::string::npos) << e.id;
    for (const auto& t : e.dialogue) EXPECT_EQ(t.text.find('{'), std::string::npos) << e.id;
  }
}

TEST(Benchmark, LabelsAreRubricScoresOfTarget) {
  const RubricEvaluator rubric;
  for (const auto& e : bench2000()) {
    EXPECT_EQ(e.labels, rubric.score_text(e.target_response)) << e.id;
  }
}

TEST(Benchmark, VulnerabilityWithinCategoryBand) {
  const auto& lib = TemplateLibrary::builtin();
  for (const auto& e : bench2000()) {
    const auto& band = lib.of(e.category);
    EXPECT_GE(e.state.vulnerability, band.vulnerability_lo - 0.005) << e.id;
    EXPECT_LE(e.state.vulnerability, band.vulnerability_hi + 0.005) << e.id;
  }
}

TEST(Benchmark, CategoryInvariants) {
  for (const auto& e : bench2000()) {
    if (e.category == Category::protective_coercion) {
      EXPECT_GE(e.labels.coercion, 4.0) << e.id;
    }
    if (e.category == Category::memory_consistency) {
      const auto boundary = normalized(e.state.boundaries);
      const auto trimmed = boundary.substr(1, boundary.size() - 2);
      ASSERT_FALSE(trimmed.empty()) << e.id;
      bool in_memory = false;
      for (const auto& f : e.memory_facts) {
        in_memory = in_memory || normalized(f).find(trimmed) != std::string::npos;
      }
      EXPECT_TRUE(in_memory) << e.id;
      EXPECT_NE(normalized(e.target_response).find(trimmed), std::string::npos) << e.id;
    }
  }
}

TEST(Benchmark, FillSlots) {
  const Profile p{"Chemistry", "Pass the exam", "No all-nighters", "Gentle tone", "Study daily"};
  EXPECT_EQ(fill_slots("{topic}: {goal_lc} / {stressor}", p, "Deadlines"),
            "Chemistry: pass the exam / Deadlines");
  EXPECT_THROW(fill_slots("{nope}", p, "x"), DataError);
  EXPECT_THROW(fill_slots("{topic", p, "x"), DataError);
}

TEST(Benchmark, TemplateLibraryValidation) {
  json j = json::parse(read_text_file(std::filesystem::path(CCN_DATA_DIR) /
                                      "benchmark_templates.v1.json"));
  EXPECT_NO_THROW(TemplateLibrary::from_json(j));
  json few = j;
  few["categories"]["manipulative_care"]["scenarios"].erase(0);
  EXPECT_THROW(TemplateLibrary::from_json(few), DataError);
  json bad_slot = j;
  bad_slot["categories"]["manipulative_care"]["scenarios"][0]["target"] = "{mystery}";
  EXPECT_THROW(TemplateLibrary::from_json(bad_slot), DataError);
}

TEST(Splits, DefaultSizes) {
  EXPECT_EQ(default_split_sizes(2000), (SplitSizes{1400, 200, 400}));
  const auto s = default_split_sizes(7);
  EXPECT_EQ(s.total(), 7);
}

TEST(Splits, ExactSizes) {
  std::map<Split, int> counts;
  for (const auto& e : bench2000()) {
    ASSERT_TRUE(e.split.has_value());
    counts[*e.split]++;
  }
  EXPECT_EQ(counts[Split::train], 1400);
  EXPECT_EQ(counts[Split::val], 200);
  EXPECT_EQ(counts[Split::test], 400);
}

TEST(Splits, StratifiedWithinOne) {
  std::map<Category, int> total;
  std::map<std::pair<Split, Category>, int> per;
  for (const auto& e : bench2000()) {
    total[e.category]++;
    per[{*e.split, e.category}]++;
  }
  const std::map<Split, double> share{{Split::train, 0.7}, {Split::val, 0.1}, {Split::test, 0.2}};
  for (const auto& [split, frac] : share) {
    for (auto c : kCategories) {
      EXPECT_LE(std::abs(per[{split, c}] - frac * total[c]), 1.0)
          << to_string(split) << " " << to_string(c);
    }
  }
  // Largest remainder with ties to the lower category index.
  const std::vector<int> test_expected{67, 67, 67, 67, 66, 66};
  const std::vector<int> val_expected{34, 34, 33, 33, 33, 33};
  for (std::size_t i = 0; i < kCategories.size(); ++i) {
    EXPECT_EQ((per[{Split::test, kCategories[i]}]), test_expected[i]);
    EXPECT_EQ((per[{Split::val, kCategories[i]}]), val_expected[i]);
  }
}

TEST(Splits, DeterministicAndSeedDependent) {
  const auto base = generate_benchmark(1, 300);
  const auto a = assign_splits(base, 4, default_split_sizes(300));
  EXPECT_EQ(a, assign_splits(base, 4, default_split_sizes(300)));
  EXPECT_NE(a, assign_splits(base, 5, default_split_sizes(300)));
}

TEST(Splits, WrongTotalThrows) {
  const auto base = generate_benchmark(1, 60);
  EXPECT_THROW(assign_splits(base, 1, SplitSizes{40, 5, 10}), InvalidArgument);
}

TEST(Splits, FilterSplit) {
  const auto test = filter_split(bench2000(), Split::test);
  EXPECT_EQ(test.size(), 400u);
  for (const auto& e : test) EXPECT_EQ(e.split, Split::test);
}

TEST(Jsonl, RoundTrip) {
  ccn::testing::TempDir dir;
  const auto& b = bench2000();
  write_jsonl(b, dir / "b.jsonl");
  EXPECT_EQ(read_jsonl(dir / "b.jsonl"), b);
  const auto unsplit = generate_benchmark(2, 12);
  write_jsonl(unsplit, dir / "u.jsonl");
  EXPECT_EQ(read_jsonl(dir / "u.jsonl"), unsplit);
}

TEST(Jsonl, ByteIdenticalAcrossRuns) {
  ccn::testing::TempDir dir;
  write_jsonl(assign_splits(generate_benchmark(3), 3), dir / "a.jsonl");
  write_jsonl(assign_splits(generate_benchmark(3), 3), dir / "b.jsonl");
  EXPECT_EQ(read_text_file(dir / "a.jsonl"), read_text_file(dir / "b.jsonl"));
}

TEST(Jsonl, EmptyFileAndBlankLines) {
  ccn::testing::TempDir dir;
  write_text_file(dir / "empty.jsonl", "");
  EXPECT_TRUE(read_jsonl(dir / "empty.jsonl").empty());
  const auto six = generate_benchmark(4, 6);
  json line = six[0];
  write_text_file(dir / "blank.jsonl", "\n" + line.dump() + "\n\n");
  const auto back = read_jsonl(dir / "blank.jsonl");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], six[0]);
}

TEST(Jsonl, TruncatedLineNamesLine) {
  ccn::testing::TempDir dir;
  const auto six = generate_benchmark(4, 6);
  json first = six[0];
  const std::string second = json(six[1]).dump();
  write_text_file(dir / "bad.jsonl",
                  first.dump() + "\n" + second.substr(0, second.size() / 2) + "\n");
  try {
    read_jsonl(dir / "bad.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.jsonl:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_jsonl(dir / "missing.jsonl"), DataError);
}

TEST(Jsonl, RejectsDialogueEndingWithAssistant) {
  json j = generate_benchmark(4, 6)[0];
  j["dialogue"].push_back({{"role", "assistant"}, {"text", "hi"}});
  EXPECT_THROW(j.get<BenchmarkExample>(), DataError);
}
