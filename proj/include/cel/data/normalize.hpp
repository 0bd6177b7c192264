#pragma once

#include <span>

#include "cel/data/timeseries.hpp"

namespace cel::data {

// Min-max scaling: x_norm = (x - x_min) / (x_max - x_min).
struct NormalizationParams {
  double x_min = 0.0;
  double x_max = 1.0;  // invariant: x_max > x_min
};

NormalizationParams fit_normalizer(std::span<const double> values);
NormalizationParams fit_normalizer(const TimeSeries& series);

double normalize(double x, const NormalizationParams& p);
double denormalize(double x_norm, const NormalizationParams& p);

}  // namespace cel::data
