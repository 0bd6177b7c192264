#include "cel/nn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace cel::nn {

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
}  // namespace

OptimizerState make_optimizer_state(const ParameterSet& params) {
  const auto n = parameter_count(params.hidden_dim(), params.input_dim());
  return OptimizerState{Vector::Zero(n), Vector::Zero(n), 0};
}

void optimizer_step(ParameterSet& params, const GradientSet& grads, OptimizerState& opt,
                    double lr, double clip_norm, OptimizerKind kind) {
  if (lr <= 0.0) throw std::invalid_argument("optimizer_step: lr must be > 0");
  if (clip_norm <= 0.0) throw std::invalid_argument("optimizer_step: clip_norm must be > 0");

  Vector g = flatten(grads);
  if (g.size() != opt.first_moment.size()) {
    throw std::invalid_argument("optimizer_step: gradient does not match optimizer state");
  }
  const double norm = g.norm();
  if (norm > clip_norm) g *= clip_norm / norm;

  Vector theta = flatten(params);
  opt.step += 1;
  if (kind == OptimizerKind::adam) {
    opt.first_moment = kBeta1 * opt.first_moment + (1.0 - kBeta1) * g;
    opt.second_moment =
        (kBeta2 * opt.second_moment.array() + (1.0 - kBeta2) * g.array().square()).matrix();
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(opt.step));
    theta.array() -=
        lr * (opt.first_moment.array() / bc1) / ((opt.second_moment.array() / bc2).sqrt() + kEps);
  } else {
    theta -= lr * g;
  }
  if (!theta.allFinite()) {
    throw std::runtime_error("optimizer_step: non-finite parameter after update");
  }
  unflatten(theta, params);
}

}  // namespace cel::nn
