#pragma once

#include <cstdint>
#include <string>

#include "cel/nn/optimizer.hpp"

namespace cel::train {

enum class NormalizerScope {
  global,         // min/max over the full series (sees future data; disclosed)
  first_context,  // min/max over the first context span only
};

struct ExperimentConfig {
  int n_contexts = 10;
  int window = 12;
  int seq_len = 1;
  int hidden_dim = 32;
  int batch_size = 32;
  double lr = 0.01;
  double lambda = 1000.0;
  int epochs_per_context = 100;
  std::uint64_t seed = 0;
  nn::OptimizerKind optimizer = nn::OptimizerKind::adam;
  double clip_norm = 5.0;
  double train_frac = 0.8;
  NormalizerScope normalizer_scope = NormalizerScope::global;
  bool shuffle = true;  // per-epoch sample shuffling with the run's generator
};

void validate(const ExperimentConfig& cfg);

// Canonical key=value serialization; the fingerprint is FNV-1a 64 over it, so
// two configs hash equal iff every field matches.
std::string canonical_string(const ExperimentConfig& cfg);
std::uint64_t fingerprint(const ExperimentConfig& cfg);

std::string to_string(nn::OptimizerKind kind);
std::string to_string(NormalizerScope scope);

}  // namespace cel::train
