#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cel/types.hpp"

namespace cel::nn {

// Trainable state of the regressor: one LSTM cell plus a scalar linear head.
// The four gates are stacked along the first axis of the fused matrices in
// the order (forget, input, candidate, output).
struct ParameterSet {
  Matrix weight_ih;      // (4H, D)
  Matrix weight_hh;      // (4H, H)
  Vector bias_ih;        // (4H)
  Vector bias_hh;        // (4H)
  Vector linear_weight;  // (H)
  double linear_bias = 0.0;

  int hidden_dim() const { return static_cast<int>(weight_hh.cols()); }
  int input_dim() const { return static_cast<int>(weight_ih.cols()); }
};

struct LstmState {
  Vector cell;    // long-term memory c_t
  Vector hidden;  // short-term memory h_t, tanh-bounded
};

// dL/dtheta, shape-congruent with ParameterSet.
struct GradientSet {
  Matrix weight_ih;
  Matrix weight_hh;
  Vector bias_ih;
  Vector bias_hh;
  Vector linear_weight;
  double linear_bias = 0.0;
};

struct BackwardResult {
  double loss = 0.0;  // mean MSE over the batch, penalty excluded
  GradientSet grads;
};

// Named segment of the canonical flat layout: fields in declaration order,
// matrices flattened row-major. Names follow the torch state-dict spelling.
struct ParameterGroup {
  std::string name;
  std::int64_t offset = 0;
  std::int64_t count = 0;
};

std::int64_t parameter_count(int hidden_dim, int input_dim);
std::vector<ParameterGroup> parameter_layout(int hidden_dim, int input_dim);

Vector flatten(const ParameterSet& params);
Vector flatten(const GradientSet& grads);
void unflatten(const Vector& flat, ParameterSet& params);
void unflatten(const Vector& flat, GradientSet& grads);

ParameterSet zero_parameters(int hidden_dim, int input_dim);
GradientSet zero_gradients(int hidden_dim, int input_dim);

// Uniform(-1/sqrt(H), +1/sqrt(H)) fill; the same seed reproduces the exact bits.
ParameterSet init_parameters(int hidden_dim, int input_dim, std::uint64_t seed);

LstmState zero_state(int hidden_dim);
LstmState lstm_step(const ParameterSet& params, const LstmState& state, const Vector& x);

// Zero-initialized state, one step per input vector, then the linear head.
double forward(const ParameterSet& params, const Sample& sample);

double mse_loss(std::span<const double> predictions, std::span<const double> targets);

// Mean MSE over the batch via the exact forward path; shared with the
// finite-difference oracle so both sides see identical arithmetic.
double batch_mse(const ParameterSet& params, std::span<const Sample> batch);

// Backpropagation through time over every step of every sample. When
// loss_grad_extra is given it is added elementwise to the result.
BackwardResult backward(const ParameterSet& params, std::span<const Sample> batch,
                        const GradientSet* loss_grad_extra = nullptr);

// Central differences of batch_mse per coordinate, (L(t+s) - L(t-s)) / 2s.
GradientSet finite_difference_gradient(const ParameterSet& params, std::span<const Sample> batch,
                                       double step);

}  // namespace cel::nn
