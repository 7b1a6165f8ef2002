#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ccn/featurizer.hpp"
#include "ccn/json_io.hpp"

namespace ccn {

struct MemorySummary {
  Eigen::VectorXd values;
  // Attention weights over occupied slots, aligned with slot_indices.
  std::vector<double> weights;
  std::vector<int> slot_indices;
};

/// Fixed-capacity k x d slot memory. A slot is occupied iff its norm is
/// non-zero. Reads use softmax over cosine similarity to the occupied
/// slots; writes replace the lowest-norm slot (lowest index on ties).
class MemoryBank {
 public:
  MemoryBank(int slots, int dim);

  int slot_count() const { return static_cast<int>(slots_.rows()); }
  int dim() const { return static_cast<int>(slots_.cols()); }
  const Eigen::MatrixXd& slots() const { return slots_; }
  int occupied_count() const;

  MemorySummary retrieve(const FeatureVector& query) const;
  // Returns the index of the replaced slot.
  int update(const FeatureVector& embedding);
  void reset();

  bool operator==(const MemoryBank& other) const { return slots_ == other.slots_; }

  json to_json() const;
  static MemoryBank from_json(const json& j);

 private:
  void check_dim(const FeatureVector& v) const;

  Eigen::MatrixXd slots_;
};

}  // namespace ccn
