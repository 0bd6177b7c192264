#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cel/harness/artifacts.hpp"
#include "cel/harness/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"cel: continual LSTM forecasting with elastic weight consolidation"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_dir, run_dir;
  std::vector<int> n_values;
  int seeds = 5;
  int grid_seeds = 1;

  auto* run_cmd = app.add_subcommand("run", "train across contexts and write run artifacts");
  run_cmd->add_option("--config", config_path, "experiment config file")->required();
  run_cmd->add_option("--data", data_path, "input CSV (date,value)")->required();
  run_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* grid_cmd =
      app.add_subcommand("grid-search", "compare context counts and pick the best one");
  grid_cmd->add_option("--config", config_path, "experiment config file")->required();
  grid_cmd->add_option("--data", data_path, "input CSV (date,value)")->required();
  grid_cmd->add_option("--n", n_values, "context counts, e.g. 6,7,8,9,10")
      ->required()
      ->delimiter(',');
  grid_cmd->add_option("--out", out_dir, "output directory")->required();
  grid_cmd->add_option("--seeds", grid_seeds, "seeds per cell (default 1)");

  auto* ablate_cmd =
      app.add_subcommand("ablate", "compare the configured lambda against lambda = 0");
  ablate_cmd->add_option("--config", config_path, "experiment config file")->required();
  ablate_cmd->add_option("--data", data_path, "input CSV (date,value)")->required();
  ablate_cmd->add_option("--seeds", seeds, "number of seeds per arm (default 5)");
  ablate_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* fim_cmd = app.add_subcommand("fim-export", "validate and print a run's FIM csv path");
  fim_cmd->add_option("--run", run_dir, "completed run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return cel::harness::run(config_path, data_path, out_dir, std::cout, std::cerr);
    }
    if (grid_cmd->parsed()) {
      const auto result =
          cel::harness::grid_search(config_path, data_path, n_values, out_dir, grid_seeds);
      std::cout << "grid-search complete: chosen_n=" << result.chosen_n
                << " out=" << out_dir << "\n";
      return 0;
    }
    if (ablate_cmd->parsed()) {
      const auto result = cel::harness::ablate(config_path, data_path, seeds, out_dir);
      std::cout << "ablation complete: mean_mst_ewc="
                << cel::harness::format_double(result.mean_mst_ewc)
                << " mean_mst_naive=" << cel::harness::format_double(result.mean_mst_naive)
                << " out=" << out_dir << "\n";
      return 0;
    }
    if (fim_cmd->parsed()) {
      std::cout << cel::harness::fim_export(run_dir).string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "cel: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
