#pragma once

#include <string_view>

namespace ccn::embedded {

// Build-time copies of data/rubric_lexicons.v1.json and
// data/benchmark_templates.v1.json.
std::string_view rubric_lexicons_json();
std::string_view benchmark_templates_json();

}  // namespace ccn::embedded
