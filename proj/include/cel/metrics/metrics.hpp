#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cel::train {
struct ExperimentConfig;
}

namespace cel::metrics {

struct MetricsReport {
  std::vector<double> eval_r2;
  std::vector<double> reeval_r2;
  std::vector<double> forgetting;  // eval_r2 - reeval_r2, elementwise
  double memory_stability = 0.0;   // 1 - mean(forgetting)
  std::uint64_t config_fingerprint = 0;
};

// 1 - SSres / SStot with the target mean as baseline. May be negative.
// Constant targets are an error, not a convention.
double r_squared(std::span<const double> targets, std::span<const double> predictions);

std::vector<double> forgetting(std::span<const double> eval_r2,
                               std::span<const double> reeval_r2);

double memory_stability(std::span<const double> forgetting_values);

MetricsReport build_report(std::span<const double> eval_r2, std::span<const double> reeval_r2,
                           const train::ExperimentConfig& cfg);

}  // namespace cel::metrics
