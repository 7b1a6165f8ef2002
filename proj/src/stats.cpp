#include "ccn/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "ccn/errors.hpp"

namespace ccn {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InvalidArgument("mean of empty sequence");
  double total = 0.0;
  for (double x : xs) total += x;
  return total / static_cast<double>(xs.size());
}

PearsonResult pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("pearson: length mismatch");
  if (xs.size() < 3) throw InvalidArgument("pearson: need at least 3 points");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw InvalidArgument("pearson: correlation undefined for a constant sequence");
  }
  PearsonResult out;
  out.n = static_cast<int>(xs.size());
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = out.n - 2.0;
  const double denom = 1.0 - out.r * out.r;
  if (denom <= 0.0) {
    out.p = 0.0;
    return out;
  }
  const double t = out.r * std::sqrt(df / denom);
  const boost::math::students_t dist(df);
  out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  return out;
}

}  // namespace ccn
