#pragma once

#include <span>
#include <vector>

#include "cel/nn/lstm.hpp"

namespace cel::ewc {

// Importance estimate and parameter anchor captured when a context finishes
// training. Both vectors live in the canonical flat parameter layout.
struct ConsolidationRecord {
  int context_id = 0;
  Vector fisher_diag;  // mean squared per-sample loss gradient, >= 0 elementwise
  Vector anchor;       // parameter values at consolidation time, never mutated
};

struct ConsolidationBank {
  std::vector<ConsolidationRecord> records;  // context_ids strictly increasing
};

// Empirical diagonal Fisher: per-sample gradient of the per-sample MSE,
// squared elementwise, averaged over the training set.
Vector compute_fim_diagonal(const nn::ParameterSet& params, std::span<const Sample> train_set);

// sum over records of lambda/2 * F * (theta - anchor)^2, summed over coordinates.
double ewc_penalty(const nn::ParameterSet& params, const ConsolidationBank& bank, double lambda);

// Coordinatewise sum over records of lambda * F * (theta - anchor).
nn::GradientSet ewc_penalty_gradient(const nn::ParameterSet& params, const ConsolidationBank& bank,
                                     double lambda);

double regularized_loss(double mse, double penalty);

// Appends a record with a deep parameter copy and freshly computed Fisher.
void consolidate(ConsolidationBank& bank, int context_id, const nn::ParameterSet& params,
                 std::span<const Sample> train_set);

}  // namespace cel::ewc
