#pragma once

#include <cstddef>
#include <vector>

#include "cel/data/normalize.hpp"
#include "cel/types.hpp"

namespace cel::data {

struct WindowedDataset {
  Batch samples;
  int window = 0;
};

// One contiguous segment of the series treated as a distinct distribution.
// Train windows temporally precede test windows; no window crosses the
// segment boundary.
struct Context {
  int id = 0;
  WindowedDataset train;
  WindowedDataset test;
  std::size_t span_begin = 0;  // raw index range [span_begin, span_end)
  std::size_t span_end = 0;
  double raw_mean = 0.0;
  double raw_std = 0.0;  // sample standard deviation of the raw span
};

// Sliding construction over an already-normalized value slice. Sample t steps
// through seq_len windows starting at t and predicts values[t + seq_len - 1 + window].
WindowedDataset make_windows(const std::vector<double>& values, int window, int seq_len);

// floor(series_len / n_contexts), validated against the window arithmetic.
std::size_t context_span(std::size_t series_len, int n_contexts, int window, int seq_len);

// Cuts the series into n_contexts consecutive spans of floor(len / n_contexts)
// points (trailing remainder dropped), windows each span, and splits the first
// floor(train_frac * count) samples into train, the rest into test.
std::vector<Context> segment_contexts(const TimeSeries& series, int n_contexts, double train_frac,
                                      int window, int seq_len, const NormalizationParams& norm);

}  // namespace cel::data
