#include "cel/data/timeseries.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace cel::data {

namespace {

std::string trim(std::string s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
  throw std::runtime_error("load_csv: " + path.string() + ": " + why);
}

}  // namespace

TimeSeries load_csv(const std::filesystem::path& path, Frequency frequency) {
  std::ifstream is(path);
  if (!is) fail(path, "cannot open file");

  std::string line;
  if (!std::getline(is, line)) fail(path, "missing header row");
  if (trim(line) != "date,value") fail(path, "header must be exactly 'date,value'");

  TimeSeries series;
  series.frequency = frequency;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    ++row;
    const auto comma = trimmed.find(',');
    if (comma == std::string::npos) {
      fail(path, "row " + std::to_string(row) + ": expected 'date,value'");
    }
    const std::string date = trim(trimmed.substr(0, comma));
    const std::string value_text = trim(trimmed.substr(comma + 1));
    double value = 0.0;
    const auto [end, ec] =
        std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (ec != std::errc{} || end != value_text.data() + value_text.size()) {
      fail(path, "row " + std::to_string(row) + ": non-numeric value '" + value_text + "'");
    }
    if (!std::isfinite(value)) {
      fail(path, "row " + std::to_string(row) + ": value is not finite");
    }
    series.timestamps.push_back(date);
    series.values.push_back(value);
  }
  if (series.values.size() < 2) fail(path, "need at least 2 data rows");
  return series;
}

}  // namespace cel::data
