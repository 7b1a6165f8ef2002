#include "ccn/eval_harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "ccn/evaluators.hpp"
#include "ccn/hashing.hpp"

namespace ccn {
namespace {

constexpr std::array<const char*, 4> kSystemNames = {
    "baseline_greedy", "ccn_candidate_only", "reranked_full", "reranked_no_care"};

std::string fixed(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string signed_fixed(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.*f", digits, x);
  return buf;
}

std::vector<const EvalRecord*> successful(std::span<const EvalRecord> records) {
  std::vector<const EvalRecord*> out;
  for (const auto& r : records) {
    if (r.ok()) out.push_back(&r);
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

const char* to_string(System s) { return kSystemNames[static_cast<std::size_t>(s)]; }

System parse_system(std::string_view text) {
  for (std::size_t i = 0; i < kSystemNames.size(); ++i) {
    if (text == kSystemNames[i]) return static_cast<System>(i);
  }
  throw InvalidArgument("unknown system '" + std::string(text) + "'");
}

CandidateSet candidate_set(System s) {
  switch (s) {
    case System::baseline_greedy:
      return CandidateSet::greedy_only;
    case System::ccn_candidate_only:
      return CandidateSet::ccn_only;
    case System::reranked_full:
      return CandidateSet::full;
    case System::reranked_no_care:
      return CandidateSet::without_ccn;
  }
  return CandidateSet::full;
}

void to_json(json& j, const EvalRecord& r) {
  j = json{{"example_id", r.example_id}, {"system", r.system}, {"category", r.category}};
  if (r.ok()) {
    const auto& c = r.chosen();
    j["chosen_label"] = to_string(c.label);
    j["response_text"] = c.text;
    j["scores"] = *c.scores;
    j["utility"] = *c.utility;
    j["risk"] = *c.risk;
    j["trace"] = *r.trace;
  } else {
    j["trace"] = nullptr;
  }
  j["error"] = r.error ? json(*r.error) : json(nullptr);
}

void from_json(const json& j, EvalRecord& r) {
  r.example_id = j.at("example_id").get<std::string>();
  r.system = j.at("system").get<std::string>();
  r.category = j.value("category", std::string{});
  r.trace.reset();
  r.error.reset();
  if (j.contains("trace") && !j.at("trace").is_null()) {
    r.trace = j.at("trace").get<SelectionTrace>();
    const auto& c = r.trace->chosen();
    if (!c.scores || !c.utility || !c.risk) {
      throw DataError("record '" + r.example_id + "' has an unscored chosen candidate");
    }
  }
  if (j.contains("error") && !j.at("error").is_null()) {
    r.error = j.at("error").get<std::string>();
  }
  if (!r.trace && !r.error) {
    throw DataError("record '" + r.example_id + "' has neither trace nor error");
  }
}

std::uint64_t example_seed(std::string_view example_id, std::uint64_t run_seed) {
  return hash_combine(run_seed, hash64(example_id));
}

std::vector<EvalRecord> run_system(System system, std::span<const BenchmarkExample> examples,
                                   const Pipeline& pipeline, const EvalOptions& options) {
  if (options.jobs < 1) throw InvalidArgument("jobs must be >= 1");
  std::vector<EvalRecord> records(examples.size());
  const CandidateSet set = candidate_set(system);

  auto run_one = [&](std::size_t i) {
    const auto& ex = examples[i];
    EvalRecord& rec = records[i];
    rec.example_id = ex.id;
    rec.system = to_string(system);
    rec.category = to_string(ex.category);
    try {
      MemoryBank bank = pipeline.new_bank();
      auto result = pipeline.respond(ex.state, ex.context(), bank,
                                     example_seed(ex.id, options.seed), set);
      rec.trace = std::move(result.trace);
    } catch (const BackendError& e) {
      rec.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < examples.size(); i = next++) run_one(i);
  };
  const auto n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(options.jobs), examples.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
  }

  std::size_t failed = 0;
  for (const auto& r : records) failed += r.ok() ? 0 : 1;
  if (!examples.empty() &&
      static_cast<double>(failed) > options.max_failure_fraction * examples.size()) {
    throw EvalAborted(std::to_string(failed) + " of " + std::to_string(examples.size()) +
                      " examples failed for " + to_string(system) + "; first error: " +
                      [&] {
                        for (const auto& r : records) {
                          if (r.error) return *r.error;
                        }
                        return std::string{};
                      }());
  }
  return records;
}

WinRate win_rate(std::span<const EvalRecord> a, std::span<const EvalRecord> b) {
  std::map<std::string, const EvalRecord*> by_id;
  for (const auto& r : a) {
    if (!by_id.emplace(r.example_id, &r).second) {
      throw InvalidArgument("duplicate example id '" + r.example_id + "'");
    }
  }
  if (a.size() != b.size()) {
    throw InvalidArgument("record sets differ in size: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  WinRate w;
  for (const auto& rb : b) {
    const auto it = by_id.find(rb.example_id);
    if (it == by_id.end()) {
      throw InvalidArgument("example id '" + rb.example_id + "' missing from first record set");
    }
    const EvalRecord& ra = *it->second;
    if (!ra.ok() || !rb.ok()) continue;
    ++w.n;
    if (rb.chosen().label == CandidateLabel::ccn) ++w.ccn_selected;
    const double du = rb.utility() - ra.utility();
    if (ra.chosen().text == rb.chosen().text || std::abs(du) < kTieTolerance) {
      ++w.ties;
    } else if (du > 0.0) {
      ++w.wins;
    } else {
      ++w.losses;
    }
  }
  return w;
}

EvalReport summarize(std::span<const SystemRecords> systems, double dir_threshold,
                     bool dir_inclusive) {
  if (systems.empty()) throw InvalidArgument("no systems to summarize");
  EvalReport report;
  std::size_t baseline = 0;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    if (systems[i].first == to_string(System::baseline_greedy)) {
      baseline = i;
      break;
    }
  }

  for (const auto& [name, records] : systems) {
    const auto ok = successful(records);
    if (ok.empty()) throw InvalidArgument("system '" + name + "' has no successful records");
    SystemSummary s;
    s.name = name;
    s.n = static_cast<int>(ok.size());
    s.failures = static_cast<int>(records.size() - ok.size());
    std::vector<double> dependency;
    AxisScores sums{0.0, 0.0, 0.0, 0.0};
    double utility_sum = 0.0;
    for (const auto* r : ok) {
      const auto& c = r->chosen();
      utility_sum += *c.utility;
      sums.autonomy += c.scores->autonomy;
      sums.dependency += c.scores->dependency;
      sums.coercion += c.scores->coercion;
      sums.support += c.scores->support;
      dependency.push_back(c.scores->dependency);
      if (c.label == CandidateLabel::ccn) ++s.ccn_selected;
    }
    const double n = static_cast<double>(ok.size());
    s.mean_utility = utility_sum / n;
    s.axis_means = {sums.autonomy / n, sums.dependency / n, sums.coercion / n, sums.support / n};
    s.dir = dependency_inflation_rate(dependency, dir_threshold, dir_inclusive);
    report.systems.push_back(std::move(s));
  }

  const double base_mean = report.systems[baseline].mean_utility;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    if (i == baseline) continue;
    report.systems[i].delta_vs_baseline = report.systems[i].mean_utility - base_mean;
    report.comparisons.push_back({systems[baseline].first, systems[i].first,
                                  win_rate(systems[baseline].second, systems[i].second)});
  }
  return report;
}

json to_json(const EvalReport& report) {
  json systems = json::array();
  for (const auto& s : report.systems) {
    systems.push_back({{"name", s.name},
                       {"n", s.n},
                       {"failures", s.failures},
                       {"mean_utility", s.mean_utility},
                       {"delta_vs_baseline",
                        s.delta_vs_baseline ? json(*s.delta_vs_baseline) : json(nullptr)},
                       {"axis_means", s.axis_means},
                       {"dir", s.dir},
                       {"ccn_selected", s.ccn_selected}});
  }
  json comparisons = json::array();
  for (const auto& c : report.comparisons) {
    comparisons.push_back({{"baseline", c.baseline},
                           {"system", c.system},
                           {"wins", c.result.wins},
                           {"losses", c.result.losses},
                           {"ties", c.result.ties},
                           {"n", c.result.n},
                           {"ccn_selected", c.result.ccn_selected}});
  }
  return json{{"systems", systems}, {"comparisons", comparisons}};
}

std::string format_table(const EvalReport& report) {
  std::size_t width = 6;
  for (const auto& s : report.systems) width = std::max(width, s.name.size());
  auto pad = [&](const std::string& text, std::size_t w) {
    return text + std::string(w > text.size() ? w - text.size() : 0, ' ');
  };
  auto lpad = [](const std::string& text, std::size_t w) {
    return std::string(w > text.size() ? w - text.size() : 0, ' ') + text;
  };

  std::ostringstream out;
  out << pad("system", width) << lpad("n", 6) << lpad("utility", 10) << lpad("delta", 10)
      << lpad("autonomy", 10) << lpad("depend", 10) << lpad("coerce", 10) << lpad("support", 10)
      << lpad("DIR", 8) << '\n';
  for (const auto& s : report.systems) {
    out << pad(s.name, width) << lpad(std::to_string(s.n), 6) << lpad(fixed(s.mean_utility), 10)
        << lpad(s.delta_vs_baseline ? signed_fixed(*s.delta_vs_baseline) : "-", 10)
        << lpad(fixed(s.axis_means.autonomy, 3), 10)
        << lpad(fixed(s.axis_means.dependency, 3), 10)
        << lpad(fixed(s.axis_means.coercion, 3), 10) << lpad(fixed(s.axis_means.support, 3), 10)
        << lpad(fixed(s.dir, 3), 8) << '\n';
  }
  if (!report.comparisons.empty()) {
    out << '\n';
    for (const auto& c : report.comparisons) {
      const auto& w = c.result;
      const double pct = w.n > 0 ? 100.0 * w.wins / w.n : 0.0;
      out << c.system << " vs " << c.baseline << ": " << w.wins << " wins, " << w.losses
          << " losses, " << w.ties << " ties of " << w.n << " (" << fixed(pct, 1)
          << "% wins); ccn selected " << w.ccn_selected << '/' << w.n << '\n';
    }
  }
  return out.str();
}

std::string to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "system,n,failures,mean_utility,delta_vs_baseline,autonomy,dependency,coercion,"
         "support,dir,ccn_selected\n";
  for (const auto& s : report.systems) {
    out << csv_field(s.name) << ',' << s.n << ',' << s.failures << ','
        << fixed(s.mean_utility, 6) << ','
        << (s.delta_vs_baseline ? fixed(*s.delta_vs_baseline, 6) : std::string{}) << ','
        << fixed(s.axis_means.autonomy, 6) << ',' << fixed(s.axis_means.dependency, 6) << ','
        << fixed(s.axis_means.coercion, 6) << ',' << fixed(s.axis_means.support, 6) << ','
        << fixed(s.dir, 6) << ',' << s.ccn_selected << '\n';
  }
  return out.str();
}

std::string plot_csv(std::span<const SystemRecords> systems) {
  std::ostringstream out;
  out << "system,example_id,utility\n";
  for (const auto& [name, records] : systems) {
    for (const auto& r : records) {
      if (!r.ok()) continue;
      out << csv_field(name) << ',' << csv_field(r.example_id) << ',' << fixed(r.utility(), 6)
          << '\n';
    }
  }
  return out.str();
}

void write_records(std::span<const EvalRecord> records, const std::filesystem::path& path) {
  std::string text;
  for (const auto& r : records) {
    text += json(r).dump();
    text += '\n';
  }
  write_text_file(path, text);
}

std::vector<EvalRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<EvalRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<EvalRecord>());
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ccn
