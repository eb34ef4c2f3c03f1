#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "mnls/grid.hpp"

namespace mnls {

// Binary field snapshot:
//   "MNLS" | version u32 | N u32 | m u32 | n_axis u32 | L f64
//   followed by m * n_axis^N complex values as little-endian (re, im) f64
//   pairs, component-major and row-major within each component.
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 4 + 4 * 4 + 8;

void write_snapshot(std::ostream& os, const Field& f);
void write_snapshot(const std::filesystem::path& path, const Field& f);

struct Snapshot {
  GridSpec grid;
  Field field;
};

/// Reads a snapshot, constructing a fresh grid from its header.
Snapshot read_snapshot(std::istream& is);
Snapshot read_snapshot(const std::filesystem::path& path);

/// Reads a snapshot onto an existing grid; the header must match it.
Field read_snapshot(std::istream& is, const GridPtr& grid);

}  // namespace mnls
