#include "cel/data/segmentation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cel::data {

WindowedDataset make_windows(const std::vector<double>& values, int window, int seq_len) {
  if (window < 1) throw std::invalid_argument("make_windows: window must be >= 1");
  if (seq_len < 1) throw std::invalid_argument("make_windows: seq_len must be >= 1");
  const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(values.size());
  const std::ptrdiff_t count = len - window - seq_len + 1;
  if (count < 1) {
    throw std::invalid_argument("make_windows: " + std::to_string(len) +
                                " values are too few for window " + std::to_string(window) +
                                " and seq_len " + std::to_string(seq_len));
  }
  WindowedDataset out;
  out.window = window;
  out.samples.reserve(static_cast<std::size_t>(count));
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    Sample sample;
    sample.inputs.reserve(static_cast<std::size_t>(seq_len));
    for (std::ptrdiff_t s = 0; s < seq_len; ++s) {
      Vector lag(window);
      for (int j = 0; j < window; ++j) lag[j] = values[static_cast<std::size_t>(t + s + j)];
      sample.inputs.push_back(std::move(lag));
    }
    sample.target = values[static_cast<std::size_t>(t + seq_len - 1 + window)];
    out.samples.push_back(std::move(sample));
  }
  return out;
}

std::size_t context_span(std::size_t series_len, int n_contexts, int window, int seq_len) {
  if (n_contexts < 1) throw std::invalid_argument("segment_contexts: n_contexts must be >= 1");
  const std::size_t span = series_len / static_cast<std::size_t>(n_contexts);
  if (span < static_cast<std::size_t>(window + seq_len + 2)) {
    throw std::invalid_argument(
        "segment_contexts: " + std::to_string(series_len) + " points are too few for n_contexts=" +
        std::to_string(n_contexts) + " with window=" + std::to_string(window));
  }
  return span;
}

std::vector<Context> segment_contexts(const TimeSeries& series, int n_contexts, double train_frac,
                                      int window, int seq_len, const NormalizationParams& norm) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw std::invalid_argument("segment_contexts: train_frac must lie in (0, 1)");
  }
  const std::size_t span = context_span(series.values.size(), n_contexts, window, seq_len);

  std::vector<Context> contexts;
  contexts.reserve(static_cast<std::size_t>(n_contexts));
  for (int i = 0; i < n_contexts; ++i) {
    Context ctx;
    ctx.id = i;
    ctx.span_begin = static_cast<std::size_t>(i) * span;
    ctx.span_end = ctx.span_begin + span;

    std::vector<double> normalized(span);
    double sum = 0.0;
    for (std::size_t j = 0; j < span; ++j) {
      const double raw = series.values[ctx.span_begin + j];
      normalized[j] = normalize(raw, norm);
      sum += raw;
    }
    ctx.raw_mean = sum / static_cast<double>(span);
    double sq = 0.0;
    for (std::size_t j = 0; j < span; ++j) {
      const double d = series.values[ctx.span_begin + j] - ctx.raw_mean;
      sq += d * d;
    }
    ctx.raw_std = std::sqrt(sq / static_cast<double>(span - 1));

    WindowedDataset windows = make_windows(normalized, window, seq_len);
    const auto count = windows.samples.size();
    const auto n_train = static_cast<std::size_t>(
        std::floor(train_frac * static_cast<double>(count)));
    ctx.train.window = window;
    ctx.test.window = window;
    ctx.train.samples.assign(windows.samples.begin(),
                             windows.samples.begin() + static_cast<std::ptrdiff_t>(n_train));
    ctx.test.samples.assign(windows.samples.begin() + static_cast<std::ptrdiff_t>(n_train),
                            windows.samples.end());
    contexts.push_back(std::move(ctx));
  }
  return contexts;
}

}  // namespace cel::data
