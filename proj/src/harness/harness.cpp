#include "cel/harness/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "cel/harness/artifacts.hpp"

namespace cel::harness {

namespace {

constexpr double kTieTolerance = 1e-6;

std::string trim(const std::string& s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void config_fail(std::size_t line, const std::string& why) {
  throw std::runtime_error("config: line " + std::to_string(line) + ": " + why);
}

template <class T>
T parse_number(const std::string& text, std::size_t line) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    config_fail(line, "cannot parse value '" + text + "'");
  }
  return value;
}

// Runs fn(0..count-1) on up to cell_parallelism() worker threads. fn must not
// throw; cell bodies record their own failures.
void for_each_cell(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const int workers = std::min<int>(cell_parallelism(), static_cast<int>(count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (static_cast<unsigned char>(c) < 0x20) {
      out += ' ';
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

train::ExperimentConfig parse_config_text(const std::string& text) {
  train::ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_fail(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) config_fail(line_no, "empty value for '" + key + "'");

    if (key == "n_contexts") {
      cfg.n_contexts = parse_number<int>(value, line_no);
    } else if (key == "window") {
      cfg.window = parse_number<int>(value, line_no);
    } else if (key == "seq_len") {
      cfg.seq_len = parse_number<int>(value, line_no);
    } else if (key == "hidden_dim") {
      cfg.hidden_dim = parse_number<int>(value, line_no);
    } else if (key == "batch_size") {
      cfg.batch_size = parse_number<int>(value, line_no);
    } else if (key == "lr") {
      cfg.lr = parse_number<double>(value, line_no);
    } else if (key == "lambda") {
      cfg.lambda = parse_number<double>(value, line_no);
    } else if (key == "epochs_per_context") {
      cfg.epochs_per_context = parse_number<int>(value, line_no);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(value, line_no);
    } else if (key == "optimizer") {
      if (value == "adam") {
        cfg.optimizer = nn::OptimizerKind::adam;
      } else if (value == "sgd") {
        cfg.optimizer = nn::OptimizerKind::sgd;
      } else {
        config_fail(line_no, "optimizer must be adam or sgd");
      }
    } else if (key == "clip_norm") {
      cfg.clip_norm = parse_number<double>(value, line_no);
    } else if (key == "train_frac") {
      cfg.train_frac = parse_number<double>(value, line_no);
    } else if (key == "normalizer_scope") {
      if (value == "global") {
        cfg.normalizer_scope = train::NormalizerScope::global;
      } else if (value == "first_context") {
        cfg.normalizer_scope = train::NormalizerScope::first_context;
      } else {
        config_fail(line_no, "normalizer_scope must be global or first_context");
      }
    } else if (key == "shuffle") {
      if (value == "true" || value == "1") {
        cfg.shuffle = true;
      } else if (value == "false" || value == "0") {
        cfg.shuffle = false;
      } else {
        config_fail(line_no, "shuffle must be true or false");
      }
    } else {
      config_fail(line_no, "unknown key '" + key + "'");
    }
  }
  train::validate(cfg);
  return cfg;
}

train::ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open file " + path.string());
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return parse_config_text(buffer.str());
}

int cell_parallelism() {
  const char* env = std::getenv("CEL_THREADS");
  if (!env || !*env) return 1;
  int value = 0;
  const std::string text(env);
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || value < 1) return 1;
  return value;
}

int select_context_count(const std::vector<std::pair<int, double>>& scores) {
  if (scores.empty()) throw std::invalid_argument("select_context_count: empty score table");
  double best = scores.front().second;
  for (const auto& [n, score] : scores) best = std::max(best, score);
  int chosen = 0;
  bool have = false;
  for (const auto& [n, score] : scores) {
    if (score >= best - kTieTolerance && (!have || n < chosen)) {
      chosen = n;
      have = true;
    }
  }
  return chosen;
}

std::vector<int> tie_candidates(const std::vector<std::pair<int, double>>& scores) {
  if (scores.empty()) return {};
  double best = scores.front().second;
  for (const auto& [n, score] : scores) best = std::max(best, score);
  std::vector<int> out;
  for (const auto& [n, score] : scores) {
    if (score >= best - kTieTolerance) out.push_back(n);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int run(const std::filesystem::path& config_path, const std::filesystem::path& data_path,
        const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err) {
  try {
    const train::ExperimentConfig cfg = load_config_file(config_path);
    const data::TimeSeries series = data::load_csv(data_path);
    const train::RunResult result = train::run_sequence(series, cfg);
    write_run_artifacts(out_dir, cfg, result, series);

    double mean_eval = 0.0;
    for (double r2 : result.report.eval_r2) mean_eval += r2;
    mean_eval /= static_cast<double>(result.report.eval_r2.size());
    out << "run complete: contexts=" << cfg.n_contexts
        << " memory_stability=" << format_double(result.report.memory_stability)
        << " mean_eval_r2=" << format_double(mean_eval) << " out=" << out_dir.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "cel: error: " << e.what() << "\n";
    return 1;
  }
}

GridSearchResult grid_search(const std::filesystem::path& config_path,
                             const std::filesystem::path& data_path,
                             const std::vector<int>& n_values,
                             const std::filesystem::path& out_dir, int n_seeds) {
  if (n_values.empty()) throw std::runtime_error("grid_search: no context counts given");
  if (n_seeds < 1) throw std::runtime_error("grid_search: seeds must be >= 1");
  const train::ExperimentConfig base = load_config_file(config_path);
  const data::TimeSeries series = data::load_csv(data_path);
  std::filesystem::create_directories(out_dir);

  GridSearchResult result;
  result.cells.resize(n_values.size());
  for_each_cell(n_values.size(), [&](std::size_t i) {
    GridCell& cell = result.cells[i];
    cell.n_contexts = n_values[i];
    try {
      double sum = 0.0;
      for (int s = 0; s < n_seeds; ++s) {
        train::ExperimentConfig cfg = base;
        cfg.n_contexts = n_values[i];
        cfg.seed = base.seed + static_cast<std::uint64_t>(s);
        const train::RunResult cell_run = train::run_sequence(series, cfg);
        double avg = 0.0;
        for (double r2 : cell_run.report.eval_r2) avg += r2;
        avg /= static_cast<double>(cell_run.report.eval_r2.size());
        cell.seeds.push_back(cfg.seed);
        cell.per_seed_avg_eval_r2.push_back(avg);
        sum += avg;
        write_run_artifacts(out_dir / ("cell_n" + std::to_string(cfg.n_contexts) + "_seed" +
                                       std::to_string(cfg.seed)),
                            cfg, cell_run, series);
      }
      cell.avg_eval_r2 = sum / static_cast<double>(n_seeds);
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });

  std::vector<std::pair<int, double>> scores;
  for (const GridCell& cell : result.cells) {
    if (cell.ok) scores.emplace_back(cell.n_contexts, cell.avg_eval_r2);
  }
  if (scores.empty()) {
    throw std::runtime_error("grid_search: every cell failed; first error: " +
                             result.cells.front().error);
  }
  result.chosen_n = select_context_count(scores);
  result.tie_candidates = tie_candidates(scores);

  std::string json = "{\n  \"cells\": [\n";
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const GridCell& cell = result.cells[i];
    json += "    {\"n_contexts\": " + std::to_string(cell.n_contexts);
    json += ", \"ok\": " + std::string(cell.ok ? "true" : "false");
    if (cell.ok) {
      json += ", \"seeds\": [";
      for (std::size_t s = 0; s < cell.seeds.size(); ++s) {
        if (s) json += ", ";
        json += std::to_string(cell.seeds[s]);
      }
      json += "], \"per_seed_avg_eval_r2\": [";
      for (std::size_t s = 0; s < cell.per_seed_avg_eval_r2.size(); ++s) {
        if (s) json += ", ";
        json += format_double(cell.per_seed_avg_eval_r2[s]);
      }
      json += "], \"avg_eval_r2\": " + format_double(cell.avg_eval_r2);
    } else {
      json += ", \"error\": \"" + json_escape(cell.error) + "\"";
    }
    json += (i + 1 < result.cells.size()) ? "},\n" : "}\n";
  }
  json += "  ],\n";
  json += "  \"chosen_n\": " + std::to_string(result.chosen_n) + ",\n";
  json += "  \"tie_tolerance\": " + format_double(kTieTolerance) + ",\n";
  json += "  \"tie_candidates\": [";
  for (std::size_t i = 0; i < result.tie_candidates.size(); ++i) {
    if (i) json += ", ";
    json += std::to_string(result.tie_candidates[i]);
  }
  json += "]\n}\n";
  atomic_write(out_dir / "grid.json", json);
  return result;
}

AblationResult ablate(const std::filesystem::path& config_path,
                      const std::filesystem::path& data_path, int n_seeds,
                      const std::filesystem::path& out_dir) {
  if (n_seeds < 1) throw std::runtime_error("ablate: seeds must be >= 1");
  const train::ExperimentConfig base = load_config_file(config_path);
  const data::TimeSeries series = data::load_csv(data_path);
  std::filesystem::create_directories(out_dir);

  struct Cell {
    train::ExperimentConfig cfg;
    bool ewc_arm = false;
    train::RunResult result;
    std::string error;
  };
  std::vector<Cell> cells;
  for (int s = 0; s < n_seeds; ++s) {
    for (const bool ewc_arm : {true, false}) {
      Cell cell;
      cell.cfg = base;
      cell.cfg.seed = base.seed + static_cast<std::uint64_t>(s);
      cell.cfg.lambda = ewc_arm ? base.lambda : 0.0;
      cell.ewc_arm = ewc_arm;
      cells.push_back(std::move(cell));
    }
  }
  for_each_cell(cells.size(), [&](std::size_t i) {
    Cell& cell = cells[i];
    try {
      cell.result = train::run_sequence(series, cell.cfg);
      write_run_artifacts(out_dir / ("cell_seed" + std::to_string(cell.cfg.seed) +
                                     (cell.ewc_arm ? "_ewc" : "_naive")),
                          cell.cfg, cell.result, series);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });
  for (const Cell& cell : cells) {
    if (!cell.error.empty()) {
      throw std::runtime_error("ablate: seed " + std::to_string(cell.cfg.seed) + " (" +
                               (cell.ewc_arm ? "ewc" : "naive") + " arm): " + cell.error);
    }
  }

  AblationResult result;
  const auto mean_forgetting = [](const train::RunResult& r) {
    double sum = 0.0;
    for (double f : r.report.forgetting) sum += f;
    return sum / static_cast<double>(r.report.forgetting.size());
  };
  for (int s = 0; s < n_seeds; ++s) {
    const Cell& ewc_cell = cells[static_cast<std::size_t>(2 * s)];
    const Cell& naive_cell = cells[static_cast<std::size_t>(2 * s + 1)];
    AblationRow row;
    row.seed = ewc_cell.cfg.seed;
    row.mst_ewc = ewc_cell.result.report.memory_stability;
    row.mst_naive = naive_cell.result.report.memory_stability;
    row.mean_forgetting_ewc = mean_forgetting(ewc_cell.result);
    row.mean_forgetting_naive = mean_forgetting(naive_cell.result);
    result.rows.push_back(row);
    result.mean_mst_ewc += row.mst_ewc;
    result.mean_mst_naive += row.mst_naive;
    result.mean_forgetting_ewc += row.mean_forgetting_ewc;
    result.mean_forgetting_naive += row.mean_forgetting_naive;
  }
  const double n = static_cast<double>(n_seeds);
  result.mean_mst_ewc /= n;
  result.mean_mst_naive /= n;
  result.mean_forgetting_ewc /= n;
  result.mean_forgetting_naive /= n;

  std::string json = "{\n  \"lambda\": " + format_double(base.lambda) + ",\n  \"rows\": [\n";
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const AblationRow& row = result.rows[i];
    json += "    {\"seed\": " + std::to_string(row.seed);
    json += ", \"mst_ewc\": " + format_double(row.mst_ewc);
    json += ", \"mst_naive\": " + format_double(row.mst_naive);
    json += ", \"mean_forgetting_ewc\": " + format_double(row.mean_forgetting_ewc);
    json += ", \"mean_forgetting_naive\": " + format_double(row.mean_forgetting_naive) + "}";
    json += (i + 1 < result.rows.size()) ? ",\n" : "\n";
  }
  json += "  ],\n";
  json += "  \"mean_mst_ewc\": " + format_double(result.mean_mst_ewc) + ",\n";
  json += "  \"mean_mst_naive\": " + format_double(result.mean_mst_naive) + ",\n";
  json += "  \"mean_forgetting_ewc\": " + format_double(result.mean_forgetting_ewc) + ",\n";
  json += "  \"mean_forgetting_naive\": " + format_double(result.mean_forgetting_naive) + "\n";
  json += "}\n";
  atomic_write(out_dir / "ablation.json", json);
  return result;
}

std::filesystem::path fim_export(const std::filesystem::path& run_out_dir) {
  const auto metrics_path = run_out_dir / "metrics.json";
  const auto csv_path = run_out_dir / "fim_export.csv";
  if (!std::filesystem::exists(metrics_path)) {
    throw std::runtime_error("fim_export: missing run artifact " + metrics_path.string());
  }
  if (!std::filesystem::exists(csv_path)) {
    throw std::runtime_error("fim_export: missing run artifact " + csv_path.string());
  }

  std::ifstream metrics_stream(metrics_path);
  const nlohmann::json metrics = nlohmann::json::parse(metrics_stream);
  const int n_contexts = metrics.at("config").at("n_contexts").get<int>();
  const int hidden = metrics.at("config").at("hidden_dim").get<int>();
  const int window = metrics.at("config").at("window").get<int>();
  const auto expected_rows =
      static_cast<std::size_t>(n_contexts) *
      static_cast<std::size_t>(nn::parameter_count(hidden, window));

  std::ifstream csv(csv_path);
  std::string line;
  if (!std::getline(csv, line) || trim(line) != "context_id,parameter_name,flat_index,fisher_value") {
    throw std::runtime_error("fim_export: " + csv_path.string() + " has an unexpected header");
  }
  std::set<std::string> names;
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    if (trim(line).empty()) continue;
    ++rows;
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    const auto third = line.find(',', second + 1);
    if (first == std::string::npos || second == std::string::npos || third == std::string::npos) {
      throw std::runtime_error("fim_export: malformed row " + std::to_string(rows));
    }
    names.insert(line.substr(first + 1, second - first - 1));
    const double fisher = std::stod(line.substr(third + 1));
    if (!(fisher >= 0.0)) {
      throw std::runtime_error("fim_export: negative fisher value in row " + std::to_string(rows));
    }
  }
  if (rows != expected_rows) {
    throw std::runtime_error("fim_export: expected " + std::to_string(expected_rows) +
                             " rows, found " + std::to_string(rows));
  }
  const auto layout = nn::parameter_layout(hidden, window);
  for (const nn::ParameterGroup& group : layout) {
    if (!names.contains(group.name)) {
      throw std::runtime_error("fim_export: parameter group '" + group.name + "' is missing");
    }
  }
  if (names.size() != layout.size()) {
    throw std::runtime_error("fim_export: unexpected parameter group names present");
  }
  return csv_path;
}

}  // namespace cel::harness
