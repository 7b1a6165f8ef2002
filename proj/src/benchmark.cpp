#include "ccn/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "ccn/embedded_data.hpp"
#include "ccn/errors.hpp"
#include "ccn/hashing.hpp"
#include "ccn/rng.hpp"

namespace ccn {
namespace {

constexpr std::array<const char*, kCategoryCount> kCategoryNames = {
    "reassurance_dependence", "overprotection_trap", "manipulative_care",
    "protective_coercion",    "autonomy_building",   "memory_consistency",
};

constexpr std::array<const char*, 3> kTierNames = {"low", "medium", "high"};
constexpr std::size_t kMinScenarios = 8;
constexpr std::uint64_t kSplitSalt = 0x73706c6974ULL;

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// Returns the slot value or nullopt for an unknown slot name.
std::optional<std::string> slot_value(std::string_view name, const Profile& p,
                                      std::string_view stressor) {
  bool lc = false;
  if (name.size() > 3 && name.ends_with("_lc")) {
    lc = true;
    name.remove_suffix(3);
  }
  std::string v;
  if (name == "topic") {
    v = p.topic;
  } else if (name == "goal") {
    v = p.goal;
  } else if (name == "boundary") {
    v = p.boundary;
  } else if (name == "preference") {
    v = p.preference;
  } else if (name == "commitment") {
    v = p.commitment;
  } else if (name == "stressor") {
    v = std::string(stressor);
  } else {
    return std::nullopt;
  }
  return lc ? lowercase(v) : v;
}

void check_slots(std::string_view text) {
  const Profile probe{"t", "g", "b", "p", "c"};
  fill_slots(text, probe, "s");
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }

int tier_of(double v, const TemplateLibrary& lib) {
  if (v < lib.low_below) return 0;
  if (v >= lib.high_from) return 2;
  return 1;
}

std::string example_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ccn-%05d", index + 1);
  return buf;
}

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

// Largest-remainder apportionment of `target` across weights summing to
// `whole`. Ties go to the lower index.
std::vector<int> apportion(const std::vector<int>& weights, int whole, int target) {
  std::vector<int> out(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(weights[i]) * target / whole;
    out[i] = static_cast<int>(std::floor(exact));
    assigned += out[i];
    remainders.emplace_back(exact - out[i], i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < target; ++k, ++assigned) {
    ++out[remainders[k % remainders.size()].second];
  }
  return out;
}

}  // namespace

const char* to_string(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

Category parse_category(std::string_view text) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (text == kCategoryNames[i]) return kCategories[i];
  }
  throw InvalidArgument("unknown category '" + std::string(text) + "'");
}

const char* to_string(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    case Split::test:
      return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw InvalidArgument("unknown split '" + std::string(text) + "'");
}

void to_json(json& j, const BenchmarkExample& e) {
  j = json{{"id", e.id},
           {"category", to_string(e.category)},
           {"state", e.state},
           {"memory_facts", e.memory_facts},
           {"dialogue", e.dialogue},
           {"target_response", e.target_response},
           {"labels", e.labels},
           {"split", e.split ? json(to_string(*e.split)) : json(nullptr)}};
}

void from_json(const json& j, BenchmarkExample& e) {
  e.id = j.at("id").get<std::string>();
  e.category = parse_category(j.at("category").get<std::string>());
  e.state = j.at("state").get<DependentState>();
  e.memory_facts = j.at("memory_facts").get<std::vector<std::string>>();
  e.dialogue = j.at("dialogue").get<std::vector<DialogueTurn>>();
  e.target_response = j.at("target_response").get<std::string>();
  e.labels = j.at("labels").get<AxisScores>();
  const auto& split = j.at("split");
  if (split.is_null()) {
    e.split.reset();
  } else {
    e.split = parse_split(split.get<std::string>());
  }
  validate(e.state);
  validate(e.labels);
  if (e.dialogue.empty() || e.dialogue.back().role != Role::user) {
    throw DataError("example '" + e.id + "' does not end with a user turn");
  }
}

std::string fill_slots(std::string_view text, const Profile& profile,
                       std::string_view stressor) {
  std::string out;
  out.reserve(text.size() + 32);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    const auto close = text.find('}', open);
    if (close == std::string_view::npos) {
      throw DataError("unterminated slot in template: " + std::string(text));
    }
    out.append(text.substr(pos, open - pos));
    const auto name = text.substr(open + 1, close - open - 1);
    const auto value = slot_value(name, profile, stressor);
    if (!value) throw DataError("unknown template slot '{" + std::string(name) + "}'");
    out += *value;
    pos = close + 1;
  }
  return out;
}

TemplateLibrary TemplateLibrary::from_json(const json& j) {
  TemplateLibrary lib;
  try {
    lib.version = j.at("version").get<std::string>();
    for (const auto& p : j.at("profiles")) {
      lib.profiles.push_back({p.at("topic").get<std::string>(), p.at("goal").get<std::string>(),
                              p.at("boundary").get<std::string>(),
                              p.at("preference").get<std::string>(),
                              p.at("commitment").get<std::string>()});
    }
    if (lib.profiles.empty()) throw DataError("template library has no profiles");
    for (std::size_t t = 0; t < kTierNames.size(); ++t) {
      lib.stressors[t] = j.at("stressors").at(kTierNames[t]).get<std::vector<std::string>>();
      if (lib.stressors[t].empty()) {
        throw DataError(std::string("empty stressor tier '") + kTierNames[t] + "'");
      }
    }
    const auto& tiers = j.at("stress_tiers");
    lib.low_below = tiers.at("low_below").get<double>();
    lib.high_from = tiers.at("high_from").get<double>();
    lib.off_tier_probability = tiers.at("off_tier_probability").get<double>();
    if (!(lib.low_below <= lib.high_from) || !(lib.off_tier_probability >= 0.0) ||
        !(lib.off_tier_probability <= 1.0)) {
      throw DataError("invalid stress_tiers");
    }

    const auto& cats = j.at("categories");
    for (const auto c : kCategories) {
      auto& ct = lib.categories[static_cast<std::size_t>(c)];
      const auto& node = cats.at(to_string(c));
      const auto band = node.at("vulnerability_band").get<std::vector<double>>();
      if (band.size() != 2 || !(band[0] >= 0.0) || !(band[0] <= band[1]) || !(band[1] <= 1.0)) {
        throw DataError(std::string("invalid vulnerability band for ") + to_string(c));
      }
      ct.vulnerability_lo = band[0];
      ct.vulnerability_hi = band[1];
      for (const auto& s : node.at("scenarios")) {
        ScenarioTemplate st;
        st.dialogue = s.at("dialogue").get<std::vector<DialogueTurn>>();
        st.memory_facts = s.at("memory_facts").get<std::vector<std::string>>();
        st.target = s.at("target").get<std::string>();
        if (st.dialogue.empty() || st.dialogue.back().role != Role::user) {
          throw DataError(std::string("scenario in ") + to_string(c) +
                          " must end with a user turn");
        }
        for (const auto& t : st.dialogue) check_slots(t.text);
        for (const auto& f : st.memory_facts) check_slots(f);
        check_slots(st.target);
        ct.scenarios.push_back(std::move(st));
      }
      if (ct.scenarios.size() < kMinScenarios) {
        throw DataError(std::string("category ") + to_string(c) + " needs at least " +
                        std::to_string(kMinScenarios) + " scenarios");
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed template library: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("malformed template library: ") + e.what());
  }
  return lib;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

const TemplateLibrary& TemplateLibrary::builtin() {
  static const TemplateLibrary lib =
      from_json(json::parse(embedded::benchmark_templates_json()));
  return lib;
}

std::vector<BenchmarkExample> generate_benchmark(std::uint64_t seed, int total,
                                                 const TemplateLibrary& lib,
                                                 const RubricLexicons& lexicons) {
  if (total < kCategoryCount) {
    throw InvalidArgument("benchmark total must be >= " + std::to_string(kCategoryCount));
  }
  const RubricEvaluator rubric(lexicons);
  Rng rng(seed);
  std::vector<BenchmarkExample> out;
  out.reserve(static_cast<std::size_t>(total));

  for (int i = 0; i < total; ++i) {
    const Category category = kCategories[static_cast<std::size_t>(i % kCategoryCount)];
    const auto& ct = lib.of(category);
    const auto& scenario = ct.scenarios[rng.index(ct.scenarios.size())];
    const auto& profile = lib.profiles[rng.index(lib.profiles.size())];
    const double v = round2(rng.uniform(ct.vulnerability_lo, ct.vulnerability_hi));

    // Stress context mostly tracks vulnerability, with some off-tier noise.
    int tier = tier_of(v, lib);
    if (rng.uniform() < lib.off_tier_probability) {
      tier = std::clamp(tier + (rng.uniform() < 0.5 ? -1 : 1), 0, 2);
    }
    const auto& pool = lib.stressors[static_cast<std::size_t>(tier)];
    const std::string stressor = pool[rng.index(pool.size())];

    BenchmarkExample e;
    e.id = example_id(i);
    e.category = category;
    e.state = {profile.goal, profile.boundary, profile.preference, v, profile.commitment,
               stressor};
    for (const auto& f : scenario.memory_facts) {
      e.memory_facts.push_back(fill_slots(f, profile, stressor));
    }
    for (const auto& t : scenario.dialogue) {
      e.dialogue.push_back({t.role, fill_slots(t.text, profile, stressor)});
    }
    e.target_response = fill_slots(scenario.target, profile, stressor);
    e.labels = rubric.score_text(e.target_response);

    if (category == Category::protective_coercion && e.labels.coercion < 4.0) {
      throw DataError("protective_coercion target scores coercion " +
                      std::to_string(e.labels.coercion) + " < 4: " + e.target_response);
    }
    if (category == Category::memory_consistency) {
      const auto boundary = lowercase(profile.boundary);
      const bool fact_has_boundary =
          std::any_of(e.memory_facts.begin(), e.memory_facts.end(),
                      [&](const std::string& f) { return contains(lowercase(f), boundary); });
      if (!fact_has_boundary || !contains(lowercase(e.target_response), boundary)) {
        throw DataError("memory_consistency target does not honor the stored boundary: " +
                        e.target_response);
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

SplitSizes default_split_sizes(int total) {
  if (total < 0) throw InvalidArgument("negative total");
  const auto parts = apportion({7, 1, 2}, 10, total);
  return {parts[0], parts[1], parts[2]};
}

std::vector<BenchmarkExample> assign_splits(std::vector<BenchmarkExample> examples,
                                            std::uint64_t seed, const SplitSizes& sizes) {
  if (sizes.train < 0 || sizes.val < 0 || sizes.test < 0) {
    throw InvalidArgument("split sizes must be non-negative");
  }
  const int n = static_cast<int>(examples.size());
  if (sizes.total() != n) {
    throw InvalidArgument("split sizes sum to " + std::to_string(sizes.total()) + " but there are " +
                          std::to_string(n) + " examples");
  }
  if (n == 0) return examples;

  std::array<std::vector<std::size_t>, kCategoryCount> members;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    members[static_cast<std::size_t>(examples[i].category)].push_back(i);
  }
  std::vector<int> counts;
  for (const auto& m : members) counts.push_back(static_cast<int>(m.size()));
  const auto test_quota = apportion(counts, n, sizes.test);
  const auto val_quota = apportion(counts, n, sizes.val);

  Rng rng(mix64(seed ^ kSplitSalt));
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto order = members[c];
    rng.shuffle(order);
    const auto n_test = static_cast<std::size_t>(test_quota[c]);
    const auto n_val = static_cast<std::size_t>(val_quota[c]);
    if (n_test + n_val > order.size()) {
      throw InvalidArgument("split sizes cannot be stratified over the categories");
    }
    for (std::size_t k = 0; k < order.size(); ++k) {
      examples[order[k]].split = k < n_test            ? Split::test
                                 : k < n_test + n_val ? Split::val
                                                      : Split::train;
    }
  }
  return examples;
}

std::vector<BenchmarkExample> filter_split(std::span<const BenchmarkExample> examples,
                                           Split split) {
  std::vector<BenchmarkExample> out;
  for (const auto& e : examples) {
    if (e.split == split) out.push_back(e);
  }
  return out;
}

void write_jsonl(std::span<const BenchmarkExample> examples,
                 const std::filesystem::path& path) {
  std::string text;
  for (const auto& e : examples) {
    text += json(e).dump();
    text += '\n';
  }
  write_text_file(path, text);
}

std::vector<BenchmarkExample> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<BenchmarkExample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<BenchmarkExample>());
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ccn
