#include "cel/metrics/metrics.hpp"

#include <algorithm>
#include <stdexcept>

#include "cel/train/config.hpp"

namespace cel::metrics {

double r_squared(std::span<const double> targets, std::span<const double> predictions) {
  if (targets.size() != predictions.size()) {
    throw std::invalid_argument("r_squared: length mismatch");
  }
  if (targets.size() < 2) throw std::invalid_argument("r_squared: need at least 2 points");

  const double n = static_cast<double>(targets.size());
  double mean = 0.0;
  for (double y : targets) mean += y;
  mean /= n;

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t m = 0; m < targets.size(); ++m) {
    const double res = targets[m] - predictions[m];
    const double dev = targets[m] - mean;
    ss_res += res * res;
    ss_tot += dev * dev;
  }
  if (ss_tot == 0.0) {
    throw std::runtime_error("r_squared: constant targets leave the denominator undefined");
  }
  return 1.0 - ss_res / ss_tot;
}

std::vector<double> forgetting(std::span<const double> eval_r2,
                               std::span<const double> reeval_r2) {
  if (eval_r2.size() != reeval_r2.size()) {
    throw std::invalid_argument("forgetting: length mismatch");
  }
  std::vector<double> out(eval_r2.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = eval_r2[i] - reeval_r2[i];
  return out;
}

double memory_stability(std::span<const double> forgetting_values) {
  if (forgetting_values.empty()) throw std::invalid_argument("memory_stability: empty list");
  double sum = 0.0;
  for (double f : forgetting_values) sum += f;
  return 1.0 - sum / static_cast<double>(forgetting_values.size());
}

MetricsReport build_report(std::span<const double> eval_r2, std::span<const double> reeval_r2,
                           const train::ExperimentConfig& cfg) {
  MetricsReport report;
  report.eval_r2.assign(eval_r2.begin(), eval_r2.end());
  report.reeval_r2.assign(reeval_r2.begin(), reeval_r2.end());
  report.forgetting = forgetting(eval_r2, reeval_r2);
  report.memory_stability = memory_stability(report.forgetting);
  report.config_fingerprint = train::fingerprint(cfg);
  return report;
}

}  // namespace cel::metrics
