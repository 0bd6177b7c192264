#pragma once

#include <filesystem>
#include <string>

#include "cel/train/trainer.hpp"

namespace cel::harness {

// All writers emit deterministic bytes: fixed key order, doubles with 17
// significant digits, LF line endings. Files land via temp + rename so a
// crashed run never leaves a truncated artifact.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

std::string format_double(double x);

std::string metrics_json(const train::ExperimentConfig& cfg, const train::RunResult& result);
std::string loss_trace_csv(const train::RunLog& log);
std::string fim_export_csv(const train::RunLog& log, const train::ExperimentConfig& cfg);
std::string predictions_csv(const train::RunLog& log, const data::TimeSeries& series);

// Writes metrics.json, loss_trace.csv, fim_export.csv, predictions.csv and
// params_ctx_<i>.snapshot under out_dir.
void write_run_artifacts(const std::filesystem::path& out_dir, const train::ExperimentConfig& cfg,
                         const train::RunResult& result, const data::TimeSeries& series);

}  // namespace cel::harness
