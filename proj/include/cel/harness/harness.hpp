#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cel/train/trainer.hpp"

namespace cel::harness {

// Flat `key = value` config text, one key per line, `#` starts a comment.
// Keys match the ExperimentConfig field names; missing keys keep defaults.
train::ExperimentConfig parse_config_text(const std::string& text);
train::ExperimentConfig load_config_file(const std::filesystem::path& path);

// Cell parallelism cap for grid-search and ablation, from CEL_THREADS (>= 1).
int cell_parallelism();

struct GridCell {
  int n_contexts = 0;
  bool ok = false;
  std::string error;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed_avg_eval_r2;
  double avg_eval_r2 = 0.0;  // mean over seeds of the per-run average eval R^2
};

struct GridSearchResult {
  std::vector<GridCell> cells;
  int chosen_n = 0;
  std::vector<int> tie_candidates;  // context counts within 1e-6 of the best score
};

// Pure selector: highest score wins; scores within 1e-6 of the maximum tie,
// and the smallest context count takes the tie.
int select_context_count(const std::vector<std::pair<int, double>>& scores);
std::vector<int> tie_candidates(const std::vector<std::pair<int, double>>& scores);

struct AblationRow {
  std::uint64_t seed = 0;
  double mst_ewc = 0.0;
  double mst_naive = 0.0;
  double mean_forgetting_ewc = 0.0;
  double mean_forgetting_naive = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  double mean_mst_ewc = 0.0;
  double mean_mst_naive = 0.0;
  double mean_forgetting_ewc = 0.0;
  double mean_forgetting_naive = 0.0;
};

// Full experiment: trains, writes every run artifact under out_dir, prints a
// one-line summary. Returns the process exit code.
int run(const std::filesystem::path& config_path, const std::filesystem::path& data_path,
        const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

GridSearchResult grid_search(const std::filesystem::path& config_path,
                             const std::filesystem::path& data_path,
                             const std::vector<int>& n_values,
                             const std::filesystem::path& out_dir, int n_seeds = 1);

// Two arms per seed: the configured lambda and lambda = 0.
AblationResult ablate(const std::filesystem::path& config_path,
                      const std::filesystem::path& data_path, int n_seeds,
                      const std::filesystem::path& out_dir);

// Validates a completed run directory and returns the FIM csv path.
std::filesystem::path fim_export(const std::filesystem::path& run_out_dir);

}  // namespace cel::harness
