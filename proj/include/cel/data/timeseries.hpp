#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cel::data {

enum class Frequency { daily, weekly, monthly };

struct TimeSeries {
  std::vector<std::string> timestamps;  // opaque labels, kept in source order
  std::vector<double> values;           // finite, same length as timestamps
  Frequency frequency = Frequency::daily;  // metadata only
};

// UTF-8 CSV with header `date,value`, one observation per row, chronological
// order required. Malformed rows are reported by 1-based data row number.
TimeSeries load_csv(const std::filesystem::path& path, Frequency frequency = Frequency::daily);

}  // namespace cel::data
