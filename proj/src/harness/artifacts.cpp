#include "cel/harness/artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "cel/nn/snapshot.hpp"

namespace cel::harness {

namespace {

void append_double_list(std::string& out, const std::vector<double>& values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_double(values[i]);
  }
  out += ']';
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& contents) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string format_double(double x) {
  if (!std::isfinite(x)) throw std::runtime_error("refusing to serialize a non-finite number");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string metrics_json(const train::ExperimentConfig& cfg, const train::RunResult& result) {
  const train::RunLog& log = result.log;
  const metrics::MetricsReport& report = result.report;

  std::string s;
  s += "{\n";
  s += "  \"config\": {\n";
  s += "    \"n_contexts\": " + std::to_string(cfg.n_contexts) + ",\n";
  s += "    \"window\": " + std::to_string(cfg.window) + ",\n";
  s += "    \"seq_len\": " + std::to_string(cfg.seq_len) + ",\n";
  s += "    \"hidden_dim\": " + std::to_string(cfg.hidden_dim) + ",\n";
  s += "    \"batch_size\": " + std::to_string(cfg.batch_size) + ",\n";
  s += "    \"lr\": " + format_double(cfg.lr) + ",\n";
  s += "    \"lambda\": " + format_double(cfg.lambda) + ",\n";
  s += "    \"epochs_per_context\": " + std::to_string(cfg.epochs_per_context) + ",\n";
  s += "    \"seed\": " + std::to_string(cfg.seed) + ",\n";
  s += "    \"optimizer\": \"" + train::to_string(cfg.optimizer) + "\",\n";
  s += "    \"clip_norm\": " + format_double(cfg.clip_norm) + ",\n";
  s += "    \"train_frac\": " + format_double(cfg.train_frac) + ",\n";
  s += "    \"normalizer_scope\": \"" + train::to_string(cfg.normalizer_scope) + "\",\n";
  s += "    \"shuffle\": " + std::string(cfg.shuffle ? "true" : "false") + ",\n";
  s += "    \"fingerprint\": \"" + std::to_string(report.config_fingerprint) + "\"\n";
  s += "  },\n";
  s += "  \"eval_r2\": ";
  append_double_list(s, report.eval_r2);
  s += ",\n  \"reeval_r2\": ";
  append_double_list(s, report.reeval_r2);
  s += ",\n  \"forgetting\": ";
  append_double_list(s, report.forgetting);
  s += ",\n  \"memory_stability\": " + format_double(report.memory_stability);
  s += ",\n  \"per_context_stats\": [\n";
  for (std::size_t i = 0; i < log.contexts.size(); ++i) {
    const train::ContextSummary& c = log.contexts[i];
    s += "    {\"context\": " + std::to_string(c.id);
    s += ", \"span_begin\": " + std::to_string(c.span_begin);
    s += ", \"span_end\": " + std::to_string(c.span_end);
    s += ", \"mean\": " + format_double(c.raw_mean);
    s += ", \"std\": " + format_double(c.raw_std);
    s += ", \"train_samples\": " + std::to_string(c.train_count);
    s += ", \"test_samples\": " + std::to_string(c.test_count) + "}";
    s += (i + 1 < log.contexts.size()) ? ",\n" : "\n";
  }
  s += "  ]\n";
  s += "}\n";
  return s;
}

std::string loss_trace_csv(const train::RunLog& log) {
  std::string s = "context,epoch,regularized_loss\n";
  for (std::size_t c = 0; c < log.loss_trace.size(); ++c) {
    for (std::size_t e = 0; e < log.loss_trace[c].size(); ++e) {
      s += std::to_string(c) + "," + std::to_string(e) + "," +
           format_double(log.loss_trace[c][e]) + "\n";
    }
  }
  return s;
}

std::string fim_export_csv(const train::RunLog& log, const train::ExperimentConfig& cfg) {
  const auto layout = nn::parameter_layout(cfg.hidden_dim, cfg.window);
  std::string s = "context_id,parameter_name,flat_index,fisher_value\n";
  for (const ewc::ConsolidationRecord& rec : log.bank.records) {
    for (const nn::ParameterGroup& group : layout) {
      for (std::int64_t j = 0; j < group.count; ++j) {
        s += std::to_string(rec.context_id) + "," + group.name + "," + std::to_string(j) + "," +
             format_double(rec.fisher_diag[group.offset + j]) + "\n";
      }
    }
  }
  return s;
}

std::string predictions_csv(const train::RunLog& log, const data::TimeSeries& series) {
  std::string s = "context,sample,date,target,eval_prediction,reeval_prediction\n";
  for (std::size_t c = 0; c < log.target_indices.size(); ++c) {
    for (std::size_t j = 0; j < log.target_indices[c].size(); ++j) {
      const std::size_t raw_index = log.target_indices[c][j];
      s += std::to_string(c) + "," + std::to_string(j) + "," + series.timestamps[raw_index];
      s += "," + format_double(data::denormalize(log.test_targets[c][j], log.norm));
      s += "," + format_double(data::denormalize(log.eval_predictions[c][j], log.norm));
      s += "," + format_double(data::denormalize(log.reeval_predictions[c][j], log.norm));
      s += "\n";
    }
  }
  return s;
}

void write_run_artifacts(const std::filesystem::path& out_dir, const train::ExperimentConfig& cfg,
                         const train::RunResult& result, const data::TimeSeries& series) {
  std::filesystem::create_directories(out_dir);
  atomic_write(out_dir / "metrics.json", metrics_json(cfg, result));
  atomic_write(out_dir / "loss_trace.csv", loss_trace_csv(result.log));
  atomic_write(out_dir / "fim_export.csv", fim_export_csv(result.log, cfg));
  atomic_write(out_dir / "predictions.csv", predictions_csv(result.log, series));
  for (std::size_t i = 0; i < result.log.snapshots.size(); ++i) {
    nn::save_snapshot(result.log.snapshots[i],
                      out_dir / ("params_ctx_" + std::to_string(i) + ".snapshot"));
  }
}

}  // namespace cel::harness
