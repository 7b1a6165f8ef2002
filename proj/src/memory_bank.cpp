#include "ccn/memory_bank.hpp"

#include <algorithm>
#include <cmath>

#include "ccn/errors.hpp"

namespace ccn {

MemoryBank::MemoryBank(int slots, int dim) {
  if (slots < 1 || dim < 1) throw InvalidArgument("memory bank shape must be positive");
  slots_ = Eigen::MatrixXd::Zero(slots, dim);
}

int MemoryBank::occupied_count() const {
  int n = 0;
  for (Eigen::Index i = 0; i < slots_.rows(); ++i) {
    if (slots_.row(i).norm() > 0.0) ++n;
  }
  return n;
}

void MemoryBank::check_dim(const FeatureVector& v) const {
  if (v.size() != slots_.cols()) {
    throw DimensionMismatch("memory bank dim " + std::to_string(slots_.cols()) +
                            ", got vector of dim " + std::to_string(v.size()));
  }
}

MemorySummary MemoryBank::retrieve(const FeatureVector& query) const {
  check_dim(query);
  MemorySummary summary;
  summary.values = Eigen::VectorXd::Zero(slots_.cols());
  const double query_norm = query.norm();
  if (query_norm == 0.0) return summary;

  std::vector<double> scores;
  for (Eigen::Index i = 0; i < slots_.rows(); ++i) {
    const double slot_norm = slots_.row(i).norm();
    if (slot_norm == 0.0) continue;
    summary.slot_indices.push_back(static_cast<int>(i));
    scores.push_back(slots_.row(i).dot(query) / (slot_norm * query_norm));
  }
  if (scores.empty()) return summary;

  const double peak = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (double& s : scores) {
    s = std::exp(s - peak);
    total += s;
  }
  summary.weights.reserve(scores.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const double w = scores[k] / total;
    summary.weights.push_back(w);
    summary.values += w * slots_.row(summary.slot_indices[k]).transpose();
  }
  return summary;
}

int MemoryBank::update(const FeatureVector& embedding) {
  check_dim(embedding);
  if (!embedding.allFinite()) throw InvalidArgument("memory embedding is not finite");
  Eigen::Index target = 0;
  double lowest = slots_.row(0).norm();
  for (Eigen::Index i = 1; i < slots_.rows(); ++i) {
    const double n = slots_.row(i).norm();
    if (n < lowest) {
      lowest = n;
      target = i;
    }
  }
  slots_.row(target) = embedding.transpose();
  return static_cast<int>(target);
}

void MemoryBank::reset() { slots_.setZero(); }

json MemoryBank::to_json() const {
  json rows = json::array();
  for (Eigen::Index i = 0; i < slots_.rows(); ++i) {
    rows.push_back(std::vector<double>(slots_.row(i).begin(), slots_.row(i).end()));
  }
  return json{{"slots", rows}};
}

MemoryBank MemoryBank::from_json(const json& j) {
  const auto& rows = j.at("slots");
  if (!rows.is_array() || rows.empty()) throw DataError("memory snapshot has no slots");
  const auto dim = rows.at(0).size();
  MemoryBank bank(static_cast<int>(rows.size()), static_cast<int>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto values = rows[i].get<std::vector<double>>();
    if (values.size() != dim) throw DimensionMismatch("ragged memory snapshot");
    for (std::size_t c = 0; c < dim; ++c) {
      bank.slots_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = values[c];
    }
  }
  return bank;
}

}  // namespace ccn
