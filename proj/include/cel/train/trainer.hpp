#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "cel/data/segmentation.hpp"
#include "cel/ewc/consolidation.hpp"
#include "cel/metrics/metrics.hpp"
#include "cel/nn/optimizer.hpp"
#include "cel/train/config.hpp"

namespace cel::train {

struct ContextSummary {
  int id = 0;
  std::size_t span_begin = 0;
  std::size_t span_end = 0;
  double raw_mean = 0.0;
  double raw_std = 0.0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

struct RunLog {
  std::vector<std::vector<double>> loss_trace;  // [context][epoch] mean regularized loss
  std::vector<double> eval_r2;
  std::vector<double> reeval_r2;
  std::vector<nn::ParameterSet> snapshots;  // parameter copy after each context
  ewc::ConsolidationBank bank;              // one record per completed context
  std::vector<ContextSummary> contexts;
  data::NormalizationParams norm;
  // Test-set detail per context, in normalized space. target_indices point at
  // the raw series position of each test target so labels and raw values can
  // be recovered downstream.
  std::vector<std::vector<std::size_t>> target_indices;
  std::vector<std::vector<double>> test_targets;
  std::vector<std::vector<double>> eval_predictions;    // right after that context's training
  std::vector<std::vector<double>> reeval_predictions;  // with the final parameters
};

struct RunResult {
  RunLog log;
  metrics::MetricsReport report;
};

// One pass over a context: per epoch, shuffled mini-batches with MSE loss,
// plus the consolidation penalty whenever ctx.id > 0. Consolidates into the
// bank exactly once after the final epoch. Returns the per-epoch mean
// regularized loss.
std::vector<double> train_context(nn::ParameterSet& params, nn::OptimizerState& opt,
                                  ewc::ConsolidationBank& bank, const data::Context& ctx,
                                  const ExperimentConfig& cfg, std::mt19937_64& rng);

std::vector<double> predict_test(const nn::ParameterSet& params, const data::Context& ctx);

double evaluate_context(const nn::ParameterSet& params, const data::Context& ctx);

// Sequential training across all contexts, evaluation after each one,
// reevaluation of every context with the final parameters.
RunResult run_sequence(const data::TimeSeries& series, const ExperimentConfig& cfg);

}  // namespace cel::train
