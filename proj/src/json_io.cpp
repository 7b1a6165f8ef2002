#include "ccn/json_io.hpp"

#include <fstream>
#include <sstream>

#include "ccn/errors.hpp"

namespace ccn {

void to_json(json& j, const DependentState& s) {
  j = json{{"goals", s.goals},
           {"boundaries", s.boundaries},
           {"preferences", s.preferences},
           {"vulnerability", s.vulnerability},
           {"commitments", s.commitments},
           {"stress_context", s.stress_context}};
}

void from_json(const json& j, DependentState& s) {
  s.goals = j.value("goals", std::string{});
  s.boundaries = j.value("boundaries", std::string{});
  s.preferences = j.value("preferences", std::string{});
  s.vulnerability = j.at("vulnerability").get<double>();
  s.commitments = j.value("commitments", std::string{});
  s.stress_context = j.value("stress_context", std::string{});
}

void to_json(json& j, const DialogueTurn& t) {
  j = json{{"role", to_string(t.role)}, {"text", t.text}};
}

void from_json(const json& j, DialogueTurn& t) {
  t.role = parse_role(j.at("role").get<std::string>());
  t.text = j.at("text").get<std::string>();
}

void to_json(json& j, const AxisScores& s) {
  j = json{{"autonomy", s.autonomy},
           {"dependency", s.dependency},
           {"coercion", s.coercion},
           {"support", s.support}};
}

void from_json(const json& j, AxisScores& s) {
  s.autonomy = j.at("autonomy").get<double>();
  s.dependency = j.at("dependency").get<double>();
  s.coercion = j.at("coercion").get<double>();
  s.support = j.at("support").get<double>();
}

void to_json(json& j, const UtilityWeights& w) {
  j = json{{"w_autonomy", w.w_autonomy}, {"w_dependency", w.w_dependency},
           {"w_coercion", w.w_coercion}, {"w_support", w.w_support},
           {"w_length", w.w_length},     {"length_norm_chars", w.length_norm_chars}};
}

void from_json(const json& j, UtilityWeights& w) {
  w.w_autonomy = j.value("w_autonomy", w.w_autonomy);
  w.w_dependency = j.value("w_dependency", w.w_dependency);
  w.w_coercion = j.value("w_coercion", w.w_coercion);
  w.w_support = j.value("w_support", w.w_support);
  w.w_length = j.value("w_length", w.w_length);
  w.length_norm_chars = j.value("length_norm_chars", w.length_norm_chars);
}

void to_json(json& j, const DecodingParams& p) {
  j = json{{"temperature", p.temperature}, {"top_p", p.top_p}};
}

void from_json(const json& j, DecodingParams& p) {
  p.temperature = j.at("temperature").get<double>();
  p.top_p = j.at("top_p").get<double>();
}

void to_json(json& j, const CandidateResponse& c) {
  j = json{{"label", to_string(c.label)}, {"text", c.text}, {"decoding", c.decoding}};
  j["scores"] = c.scores ? json(*c.scores) : json(nullptr);
  j["utility"] = c.utility ? json(*c.utility) : json(nullptr);
  j["risk"] = c.risk ? json(*c.risk) : json(nullptr);
}

void from_json(const json& j, CandidateResponse& c) {
  c.label = parse_candidate_label(j.at("label").get<std::string>());
  c.text = j.at("text").get<std::string>();
  if (j.contains("decoding")) c.decoding = j.at("decoding").get<DecodingParams>();
  c.scores.reset();
  c.utility.reset();
  c.risk.reset();
  if (j.contains("scores") && !j.at("scores").is_null()) {
    c.scores = j.at("scores").get<AxisScores>();
  }
  if (j.contains("utility") && !j.at("utility").is_null()) {
    c.utility = j.at("utility").get<double>();
  }
  if (j.contains("risk") && !j.at("risk").is_null()) {
    c.risk = j.at("risk").get<double>();
  }
}

void to_json(json& j, const SelectionTrace& t) {
  json feasible = json::array();
  for (auto label : t.feasible_labels) feasible.push_back(to_string(label));
  j = json{{"care_signal", t.care_signal},
           {"kappa", t.kappa},
           {"candidates", t.candidates},
           {"feasible_labels", feasible},
           {"chosen_label", to_string(t.chosen_label)},
           {"constraint_relaxed", t.constraint_relaxed}};
}

void from_json(const json& j, SelectionTrace& t) {
  t.care_signal = j.at("care_signal").get<double>();
  t.kappa = j.at("kappa").get<double>();
  t.candidates = j.at("candidates").get<std::vector<CandidateResponse>>();
  t.feasible_labels.clear();
  for (const auto& label : j.at("feasible_labels")) {
    t.feasible_labels.push_back(parse_candidate_label(label.get<std::string>()));
  }
  t.chosen_label = parse_candidate_label(j.at("chosen_label").get<std::string>());
  t.constraint_relaxed = j.at("constraint_relaxed").get<bool>();
}

void to_json(json& j, const PlanEntry& e) {
  j = json{{"label", to_string(e.label)}, {"params", e.params}};
}

void from_json(const json& j, PlanEntry& e) {
  e.label = parse_candidate_label(j.at("label").get<std::string>());
  e.params = j.at("params").get<DecodingParams>();
}

void to_json(json& j, const PipelineConfig& c) {
  j = json{{"utility_weights", c.utility_weights},
           {"memory_slots", c.memory_slots},
           {"embed_dim", c.embed_dim},
           {"dir_threshold", c.dir_threshold},
           {"dir_inclusive", c.dir_inclusive},
           {"kappa_base", c.kappa_base},
           {"kappa_slope", c.kappa_slope},
           {"care_variant", to_string(c.care_variant)},
           {"max_in_flight", c.max_in_flight},
           {"candidate_plan_overrides", c.candidate_plan_overrides}};
}

void from_json(const json& j, PipelineConfig& c) {
  if (j.contains("utility_weights")) from_json(j.at("utility_weights"), c.utility_weights);
  c.memory_slots = j.value("memory_slots", c.memory_slots);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.dir_threshold = j.value("dir_threshold", c.dir_threshold);
  c.dir_inclusive = j.value("dir_inclusive", c.dir_inclusive);
  c.kappa_base = j.value("kappa_base", c.kappa_base);
  c.kappa_slope = j.value("kappa_slope", c.kappa_slope);
  if (j.contains("care_variant")) {
    c.care_variant = parse_care_variant(j.at("care_variant").get<std::string>());
  }
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  if (j.contains("candidate_plan_overrides")) {
    c.candidate_plan_overrides =
        j.at("candidate_plan_overrides").get<std::vector<PlanEntry>>();
  }
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(flat)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw DimensionMismatch("matrix data does not match its declared shape");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j, int indent) {
  write_text_file(path, j.dump(indent) + "\n");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace ccn
