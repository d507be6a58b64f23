#include "censmte/stats.hpp"

#include <algorithm>
#include <cmath>

#include "censmte/error.hpp"

namespace censmte {

double quantileSorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw Error(ErrorCode::kInvalidArgument, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double empiricalInverseCdf(std::vector<double> sample, double prob) {
  if (sample.empty()) throw Error(ErrorCode::kInvalidArgument, "quantile of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  // Smallest index i (1-based) with i / n >= prob.
  auto i = static_cast<std::size_t>(std::ceil(prob * n - 1e-12 * n));
  i = std::clamp<std::size_t>(i, 1, sample.size());
  return sample[i - 1];
}

double trapezoid(std::span<const double> nodes, std::span<const double> values) {
  double area = 0.0;
  for (std::size_t j = 1; j < nodes.size(); ++j) {
    area += 0.5 * (values[j] + values[j - 1]) * (nodes[j] - nodes[j - 1]);
  }
  return area;
}

}  // namespace censmte
