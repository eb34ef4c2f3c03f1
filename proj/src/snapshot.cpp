#include "mnls/snapshot.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace mnls {

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& is) {
  std::array<char, sizeof(T)> bytes;
  if (!is.read(bytes.data(), bytes.size())) {
    throw std::runtime_error("snapshot: unexpected end of stream");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

struct Header {
  std::uint32_t dim, m, n_axis;
  double L;
};

Header read_header(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "MNLS", 4) != 0) {
    throw std::runtime_error("snapshot: bad magic");
  }
  const auto version = get_le<std::uint32_t>(is);
  if (version != kSnapshotVersion) {
    throw std::runtime_error("snapshot: unsupported version " + std::to_string(version));
  }
  Header h{};
  h.dim = get_le<std::uint32_t>(is);
  h.m = get_le<std::uint32_t>(is);
  h.n_axis = get_le<std::uint32_t>(is);
  h.L = get_le<double>(is);
  return h;
}

void read_body(std::istream& is, Field& f) {
  for (auto& z : f.data()) {
    const double re = get_le<double>(is);
    const double im = get_le<double>(is);
    z = {re, im};
  }
}

}  // namespace

void write_snapshot(std::ostream& os, const Field& f) {
  const Grid& g = *f.grid();
  os.write("MNLS", 4);
  put_le<std::uint32_t>(os, kSnapshotVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.components()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.n_axis()));
  put_le<double>(os, g.half_width());
  for (const auto& z : f.data()) {
    put_le<double>(os, z.real());
    put_le<double>(os, z.imag());
  }
  if (!os) throw std::runtime_error("snapshot: write failed");
}

void write_snapshot(const std::filesystem::path& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("snapshot: cannot open " + path.string());
  write_snapshot(os, f);
}

Snapshot read_snapshot(std::istream& is) {
  const Header h = read_header(is);
  GridSpec spec;
  spec.dim = static_cast<int>(h.dim);
  spec.n_axis = static_cast<int>(h.n_axis);
  spec.half_width = h.L;
  Field f(make_grid(spec), static_cast<int>(h.m));
  read_body(is, f);
  return {spec, std::move(f)};
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("snapshot: cannot open " + path.string());
  return read_snapshot(is);
}

Field read_snapshot(std::istream& is, const GridPtr& grid) {
  const Header h = read_header(is);
  if (static_cast<int>(h.dim) != grid->dim() || static_cast<int>(h.n_axis) != grid->n_axis() ||
      h.L != grid->half_width()) {
    throw std::runtime_error("snapshot: header does not match the target grid");
  }
  Field f(grid, static_cast<int>(h.m));
  read_body(is, f);
  return f;
}

}  // namespace mnls
