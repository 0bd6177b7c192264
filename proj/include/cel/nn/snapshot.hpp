#pragma once

#include <filesystem>

#include "cel/nn/lstm.hpp"

namespace cel::nn {

// Binary parameter container: a header naming the dimensions followed by the
// six float64 arrays in canonical order. Written atomically (temp + rename);
// round-trips bit-exactly. Little-endian hosts only.
void save_snapshot(const ParameterSet& params, const std::filesystem::path& path);
ParameterSet load_snapshot(const std::filesystem::path& path);

}  // namespace cel::nn
