#include "cel/nn/snapshot.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cel::nn {

namespace {

constexpr char kMagic[8] = {'C', 'E', 'L', 'S', 'N', 'A', 'P', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

[[noreturn]] void corrupt(const std::filesystem::path& path, const std::string& why) {
  throw std::runtime_error("load_snapshot: " + path.string() + ": " + why);
}

}  // namespace

void save_snapshot(const ParameterSet& params, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("save_snapshot: cannot open " + tmp.string());
    os.write(kMagic, sizeof kMagic);
    write_u32(os, static_cast<std::uint32_t>(params.hidden_dim()));
    write_u32(os, static_cast<std::uint32_t>(params.input_dim()));
    const Vector flat = flatten(params);
    const auto layout = parameter_layout(params.hidden_dim(), params.input_dim());
    write_u32(os, static_cast<std::uint32_t>(layout.size()));
    for (const ParameterGroup& group : layout) {
      write_u32(os, static_cast<std::uint32_t>(group.name.size()));
      os.write(group.name.data(), static_cast<std::streamsize>(group.name.size()));
      write_u64(os, static_cast<std::uint64_t>(group.count));
      os.write(reinterpret_cast<const char*>(flat.data() + group.offset),
               static_cast<std::streamsize>(group.count * sizeof(double)));
    }
    if (!os) throw std::runtime_error("save_snapshot: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ParameterSet load_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_snapshot: cannot open " + path.string());
  char magic[8] = {};
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) corrupt(path, "bad magic");
  const int hidden = static_cast<int>(read_u32(is));
  const int input = static_cast<int>(read_u32(is));
  if (!is || hidden < 1 || input < 1) corrupt(path, "bad dimensions");
  const auto layout = parameter_layout(hidden, input);
  const std::uint32_t field_count = read_u32(is);
  if (field_count != layout.size()) corrupt(path, "unexpected field count");
  Vector flat(parameter_count(hidden, input));
  for (const ParameterGroup& group : layout) {
    const std::uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is || name != group.name) corrupt(path, "unexpected field name");
    const std::uint64_t count = read_u64(is);
    if (count != static_cast<std::uint64_t>(group.count)) corrupt(path, "unexpected field size");
    is.read(reinterpret_cast<char*>(flat.data() + group.offset),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) corrupt(path, "truncated data");
  }
  ParameterSet params = zero_parameters(hidden, input);
  unflatten(flat, params);
  return params;
}

}  // namespace cel::nn
