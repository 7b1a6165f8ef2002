#pragma once

// Synthetic six-category relational benchmark: template-driven generation,
// stratified splits and JSONL storage.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccn/evaluators.hpp"
#include "ccn/json_io.hpp"
#include "ccn/types.hpp"

namespace ccn {

enum class Category {
  reassurance_dependence,
  overprotection_trap,
  manipulative_care,
  protective_coercion,
  autonomy_building,
  memory_consistency,
};

inline constexpr int kCategoryCount = 6;
inline constexpr std::array<Category, kCategoryCount> kCategories = {
    Category::reassurance_dependence, Category::overprotection_trap,
    Category::manipulative_care,      Category::protective_coercion,
    Category::autonomy_building,      Category::memory_consistency,
};

const char* to_string(Category category);
Category parse_category(std::string_view text);

enum class Split { train, val, test };

const char* to_string(Split split);
Split parse_split(std::string_view text);

struct BenchmarkExample {
  std::string id;
  Category category = Category::reassurance_dependence;
  DependentState state;
  std::vector<std::string> memory_facts;
  std::vector<DialogueTurn> dialogue;
  std::string target_response;
  AxisScores labels;
  std::optional<Split> split;  // unset until assign_splits

  DialogueContext context() const { return {dialogue, memory_facts}; }
  bool operator==(const BenchmarkExample&) const = default;
};

void to_json(json& j, const BenchmarkExample& e);
void from_json(const json& j, BenchmarkExample& e);

struct Profile {
  std::string topic;
  std::string goal;
  std::string boundary;
  std::string preference;
  std::string commitment;
};

struct ScenarioTemplate {
  std::vector<DialogueTurn> dialogue;  // text may contain {slot} markers
  std::vector<std::string> memory_facts;
  std::string target;
};

struct CategoryTemplates {
  double vulnerability_lo = 0.0;
  double vulnerability_hi = 1.0;
  std::vector<ScenarioTemplate> scenarios;
};

struct TemplateLibrary {
  std::string version;
  std::vector<Profile> profiles;
  std::array<std::vector<std::string>, 3> stressors;  // low, medium, high
  double low_below = 0.4;
  double high_from = 0.7;
  double off_tier_probability = 0.2;
  std::array<CategoryTemplates, kCategoryCount> categories;

  const CategoryTemplates& of(Category c) const {
    return categories[static_cast<std::size_t>(c)];
  }

  // Throws DataError on missing fields, unknown slots, fewer than 8
  // scenarios per category, or a scenario whose dialogue does not end with a
  // user turn.
  static TemplateLibrary from_json(const json& j);
  static TemplateLibrary load(const std::filesystem::path& path);
  // Compiled-in copy of data/benchmark_templates.v1.json.
  static const TemplateLibrary& builtin();
};

// Replaces {slot} markers. Known slots: topic, goal, boundary, preference,
// commitment, stressor, each also with an _lc (lowercased) form.
std::string fill_slots(std::string_view text, const Profile& profile,
                       std::string_view stressor);

/// Example i gets category i mod 6, so counts differ by at most one.
/// Labels are the rubric scores of each target response. Throws
/// InvalidArgument when total < 6 and DataError when a template violates a
/// category invariant.
std::vector<BenchmarkExample> generate_benchmark(
    std::uint64_t seed, int total = 2000,
    const TemplateLibrary& library = TemplateLibrary::builtin(),
    const RubricLexicons& lexicons = RubricLexicons::builtin());

struct SplitSizes {
  int train = 1400;
  int val = 200;
  int test = 400;

  int total() const { return train + val + test; }
  bool operator==(const SplitSizes&) const = default;
};

// 70/10/20 of total with largest-remainder rounding.
SplitSizes default_split_sizes(int total);

/// Stratified by category: each category's val/test quotas are its
/// proportional share, rounded by largest remainder so the global sizes are
/// exact; members are chosen by a seeded shuffle. Throws InvalidArgument when
/// sizes do not sum to the number of examples.
std::vector<BenchmarkExample> assign_splits(std::vector<BenchmarkExample> examples,
                                            std::uint64_t seed,
                                            const SplitSizes& sizes = {});

std::vector<BenchmarkExample> filter_split(std::span<const BenchmarkExample> examples,
                                           Split split);

void write_jsonl(std::span<const BenchmarkExample> examples,
                 const std::filesystem::path& path);
// Blank lines are skipped; a malformed line raises DataError naming it.
std::vector<BenchmarkExample> read_jsonl(const std::filesystem::path& path);

}  // namespace ccn
