#pragma once

#include <span>

namespace ccn {

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;  // two-sided, Student t with n-2 degrees of freedom
  int n = 0;
};

/// Sample Pearson correlation. Throws InvalidArgument when lengths differ,
/// n < 3, or either sequence is constant.
PearsonResult pearson(std::span<const double> xs, std::span<const double> ys);

double mean(std::span<const double> xs);

}  // namespace ccn
