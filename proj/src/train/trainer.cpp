#include "cel/train/trainer.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cel/random.hpp"

namespace cel::train {

std::vector<double> train_context(nn::ParameterSet& params, nn::OptimizerState& opt,
                                  ewc::ConsolidationBank& bank, const data::Context& ctx,
                                  const ExperimentConfig& cfg, std::mt19937_64& rng) {
  const Batch& samples = ctx.train.samples;
  if (samples.empty()) {
    throw std::runtime_error("train_context: empty training set in context " +
                             std::to_string(ctx.id));
  }

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(cfg.epochs_per_context));
  Batch batch;
  for (int epoch = 0; epoch < cfg.epochs_per_context; ++epoch) {
    try {
      if (cfg.shuffle) shuffle_values(order, rng);
      double loss_sum = 0.0;
      int batches = 0;
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t stop =
            std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
        batch.clear();
        for (std::size_t j = start; j < stop; ++j) batch.push_back(samples[order[j]]);

        double penalty = 0.0;
        nn::BackwardResult result;
        if (ctx.id > 0) {
          penalty = ewc::ewc_penalty(params, bank, cfg.lambda);
          const nn::GradientSet penalty_grad = ewc::ewc_penalty_gradient(params, bank, cfg.lambda);
          result = nn::backward(params, batch, &penalty_grad);
        } else {
          result = nn::backward(params, batch);
        }
        loss_sum += ewc::regularized_loss(result.loss, penalty);
        nn::optimizer_step(params, result.grads, opt, cfg.lr, cfg.clip_norm, cfg.optimizer);
        ++batches;
      }
      trace.push_back(loss_sum / batches);
    } catch (const std::exception& e) {
      throw std::runtime_error("context " + std::to_string(ctx.id) + ", epoch " +
                               std::to_string(epoch) + ": " + e.what());
    }
  }

  try {
    ewc::consolidate(bank, ctx.id, params, samples);
  } catch (const std::exception& e) {
    throw std::runtime_error("context " + std::to_string(ctx.id) + ", consolidation: " + e.what());
  }
  return trace;
}

std::vector<double> predict_test(const nn::ParameterSet& params, const data::Context& ctx) {
  std::vector<double> predictions;
  predictions.reserve(ctx.test.samples.size());
  for (const Sample& sample : ctx.test.samples) {
    predictions.push_back(nn::forward(params, sample));
  }
  return predictions;
}

double evaluate_context(const nn::ParameterSet& params, const data::Context& ctx) {
  if (ctx.test.samples.size() < 2) {
    throw std::runtime_error("evaluate_context: context " + std::to_string(ctx.id) +
                             " has fewer than 2 test samples");
  }
  std::vector<double> targets;
  targets.reserve(ctx.test.samples.size());
  for (const Sample& sample : ctx.test.samples) targets.push_back(sample.target);
  return metrics::r_squared(targets, predict_test(params, ctx));
}

RunResult run_sequence(const data::TimeSeries& series, const ExperimentConfig& cfg) {
  validate(cfg);

  data::NormalizationParams norm;
  if (cfg.normalizer_scope == NormalizerScope::global) {
    norm = data::fit_normalizer(series);
  } else {
    const std::size_t span =
        data::context_span(series.values.size(), cfg.n_contexts, cfg.window, cfg.seq_len);
    norm = data::fit_normalizer(std::span<const double>(series.values.data(), span));
  }

  const std::vector<data::Context> contexts = data::segment_contexts(
      series, cfg.n_contexts, cfg.train_frac, cfg.window, cfg.seq_len, norm);

  nn::ParameterSet params = nn::init_parameters(cfg.hidden_dim, cfg.window, cfg.seed);
  nn::OptimizerState opt = nn::make_optimizer_state(params);
  std::mt19937_64 rng(cfg.seed);

  RunResult out;
  RunLog& log = out.log;
  log.norm = norm;

  for (const data::Context& ctx : contexts) {
    log.loss_trace.push_back(train_context(params, opt, log.bank, ctx, cfg, rng));
    log.eval_r2.push_back(evaluate_context(params, ctx));
    log.eval_predictions.push_back(predict_test(params, ctx));
    log.snapshots.push_back(params);

    ContextSummary summary;
    summary.id = ctx.id;
    summary.span_begin = ctx.span_begin;
    summary.span_end = ctx.span_end;
    summary.raw_mean = ctx.raw_mean;
    summary.raw_std = ctx.raw_std;
    summary.train_count = ctx.train.samples.size();
    summary.test_count = ctx.test.samples.size();
    log.contexts.push_back(summary);

    std::vector<std::size_t> indices;
    std::vector<double> targets;
    const std::size_t n_train = ctx.train.samples.size();
    for (std::size_t j = 0; j < ctx.test.samples.size(); ++j) {
      indices.push_back(ctx.span_begin + n_train + j + static_cast<std::size_t>(cfg.window) +
                        static_cast<std::size_t>(cfg.seq_len) - 1);
      targets.push_back(ctx.test.samples[j].target);
    }
    log.target_indices.push_back(std::move(indices));
    log.test_targets.push_back(std::move(targets));
  }

  for (const data::Context& ctx : contexts) {
    log.reeval_r2.push_back(evaluate_context(params, ctx));
    log.reeval_predictions.push_back(predict_test(params, ctx));
  }

  out.report = metrics::build_report(log.eval_r2, log.reeval_r2, cfg);
  return out;
}

}  // namespace cel::train
