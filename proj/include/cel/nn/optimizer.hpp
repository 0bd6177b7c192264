#pragma once

#include <cstdint>

#include "cel/nn/lstm.hpp"

namespace cel::nn {

enum class OptimizerKind { adam, sgd };

// Moment accumulators over the canonical flat parameter layout.
struct OptimizerState {
  Vector first_moment;
  Vector second_moment;  // >= 0 elementwise
  std::int64_t step = 0;
};

OptimizerState make_optimizer_state(const ParameterSet& params);

// Clips the gradient to clip_norm (global L2) and applies one in-place update.
// Adam uses beta1=0.9, beta2=0.999, eps=1e-8 with bias correction.
void optimizer_step(ParameterSet& params, const GradientSet& grads, OptimizerState& opt,
                    double lr, double clip_norm, OptimizerKind kind = OptimizerKind::adam);

}  // namespace cel::nn
