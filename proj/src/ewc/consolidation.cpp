#include "cel/ewc/consolidation.hpp"

#include <cmath>
#include <stdexcept>

namespace cel::ewc {

namespace {

void check_record(const ConsolidationRecord& rec, Eigen::Index expected) {
  if (rec.fisher_diag.size() != expected || rec.anchor.size() != expected) {
    throw std::invalid_argument("ewc: record shape does not match parameters (context " +
                                std::to_string(rec.context_id) + ")");
  }
}

}  // namespace

Vector compute_fim_diagonal(const nn::ParameterSet& params, std::span<const Sample> train_set) {
  if (train_set.empty()) {
    throw std::invalid_argument("compute_fim_diagonal: empty train set");
  }
  Vector fisher = Vector::Zero(nn::parameter_count(params.hidden_dim(), params.input_dim()));
  for (const Sample& sample : train_set) {
    const auto result = nn::backward(params, std::span<const Sample>(&sample, 1));
    fisher += nn::flatten(result.grads).array().square().matrix();
  }
  fisher /= static_cast<double>(train_set.size());
  return fisher;
}

double ewc_penalty(const nn::ParameterSet& params, const ConsolidationBank& bank, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("ewc_penalty: lambda must be >= 0");
  const Vector theta = nn::flatten(params);
  double penalty = 0.0;
  for (const ConsolidationRecord& rec : bank.records) {
    check_record(rec, theta.size());
    penalty += 0.5 * lambda *
               (rec.fisher_diag.array() * (theta - rec.anchor).array().square()).sum();
  }
  return penalty;
}

nn::GradientSet ewc_penalty_gradient(const nn::ParameterSet& params, const ConsolidationBank& bank,
                                     double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("ewc_penalty_gradient: lambda must be >= 0");
  const Vector theta = nn::flatten(params);
  Vector grad = Vector::Zero(theta.size());
  for (const ConsolidationRecord& rec : bank.records) {
    check_record(rec, theta.size());
    grad += lambda * (rec.fisher_diag.array() * (theta - rec.anchor).array()).matrix();
  }
  nn::GradientSet out = nn::zero_gradients(params.hidden_dim(), params.input_dim());
  nn::unflatten(grad, out);
  return out;
}

double regularized_loss(double mse, double penalty) { return mse + penalty; }

void consolidate(ConsolidationBank& bank, int context_id, const nn::ParameterSet& params,
                 std::span<const Sample> train_set) {
  if (!bank.records.empty() && context_id <= bank.records.back().context_id) {
    throw std::invalid_argument("consolidate: context_id " + std::to_string(context_id) +
                                " is not greater than the last recorded id");
  }
  ConsolidationRecord rec;
  rec.context_id = context_id;
  rec.fisher_diag = compute_fim_diagonal(params, train_set);
  rec.anchor = nn::flatten(params);
  bank.records.push_back(std::move(rec));
}

}  // namespace cel::ewc
