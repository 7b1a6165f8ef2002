#pragma once

// JSON (de)serialization for domain types, plus small file helpers.

#include <filesystem>
#include <string>

#include <Eigen/Dense>
#include "json.hpp"

#include "ccn/types.hpp"

namespace ccn {

using json = nlohmann::json;

void to_json(json& j, const DependentState& s);
void from_json(const json& j, DependentState& s);
void to_json(json& j, const DialogueTurn& t);
void from_json(const json& j, DialogueTurn& t);
void to_json(json& j, const AxisScores& s);
void from_json(const json& j, AxisScores& s);
void to_json(json& j, const UtilityWeights& w);
void from_json(const json& j, UtilityWeights& w);
void to_json(json& j, const DecodingParams& p);
void from_json(const json& j, DecodingParams& p);
void to_json(json& j, const CandidateResponse& c);
void from_json(const json& j, CandidateResponse& c);
void to_json(json& j, const SelectionTrace& t);
void from_json(const json& j, SelectionTrace& t);
void to_json(json& j, const PlanEntry& e);
void from_json(const json& j, PlanEntry& e);
void to_json(json& j, const PipelineConfig& c);
// Missing keys keep their current values, so this also applies overrides.
void from_json(const json& j, PipelineConfig& c);

// Row-major flat array with explicit shape.
json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);
json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j, int indent = 2);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ccn
