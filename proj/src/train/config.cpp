#include "cel/train/config.hpp"

#include <cstdio>
#include <stdexcept>

namespace cel::train {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  const auto bad = [](const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
  };
  if (cfg.n_contexts < 1) bad("n_contexts must be >= 1");
  if (cfg.window < 1) bad("window must be >= 1");
  if (cfg.seq_len < 1) bad("seq_len must be >= 1");
  if (cfg.hidden_dim < 1) bad("hidden_dim must be >= 1");
  if (cfg.batch_size < 1) bad("batch_size must be >= 1");
  if (!(cfg.lr > 0.0)) bad("lr must be > 0");
  if (!(cfg.lambda >= 0.0)) bad("lambda must be >= 0");
  if (cfg.epochs_per_context < 1) bad("epochs_per_context must be >= 1");
  if (!(cfg.clip_norm > 0.0)) bad("clip_norm must be > 0");
  if (!(cfg.train_frac > 0.0 && cfg.train_frac < 1.0)) bad("train_frac must lie in (0, 1)");
}

std::string canonical_string(const ExperimentConfig& cfg) {
  std::string s;
  s += "n_contexts=" + std::to_string(cfg.n_contexts);
  s += ";window=" + std::to_string(cfg.window);
  s += ";seq_len=" + std::to_string(cfg.seq_len);
  s += ";hidden_dim=" + std::to_string(cfg.hidden_dim);
  s += ";batch_size=" + std::to_string(cfg.batch_size);
  s += ";lr=" + fmt(cfg.lr);
  s += ";lambda=" + fmt(cfg.lambda);
  s += ";epochs_per_context=" + std::to_string(cfg.epochs_per_context);
  s += ";seed=" + std::to_string(cfg.seed);
  s += ";optimizer=" + to_string(cfg.optimizer);
  s += ";clip_norm=" + fmt(cfg.clip_norm);
  s += ";train_frac=" + fmt(cfg.train_frac);
  s += ";normalizer_scope=" + to_string(cfg.normalizer_scope);
  s += ";shuffle=" + std::string(cfg.shuffle ? "true" : "false");
  return s;
}

std::uint64_t fingerprint(const ExperimentConfig& cfg) {
  // FNV-1a 64
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : canonical_string(cfg)) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string to_string(nn::OptimizerKind kind) {
  return kind == nn::OptimizerKind::adam ? "adam" : "sgd";
}

std::string to_string(NormalizerScope scope) {
  return scope == NormalizerScope::global ? "global" : "first_context";
}

}  // namespace cel::train
