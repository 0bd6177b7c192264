#include "cel/data/normalize.hpp"

#include <algorithm>
#include <stdexcept>

namespace cel::data {

NormalizationParams fit_normalizer(std::span<const double> values) {
  if (values.size() < 2) {
    throw std::invalid_argument("fit_normalizer: need at least 2 values");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) {
    throw std::runtime_error("fit_normalizer: constant series (x_max == x_min)");
  }
  return NormalizationParams{*lo, *hi};
}

NormalizationParams fit_normalizer(const TimeSeries& series) {
  return fit_normalizer(std::span<const double>(series.values));
}

double normalize(double x, const NormalizationParams& p) {
  return (x - p.x_min) / (p.x_max - p.x_min);
}

double denormalize(double x_norm, const NormalizationParams& p) {
  return x_norm * (p.x_max - p.x_min) + p.x_min;
}

}  // namespace cel::data
