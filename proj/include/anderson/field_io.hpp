#pragma once

// Field dumps.
//
//   .csv  header "i,j,value", one row per node in row-major order, values
//         printed with 17 significant digits.
//   .f64  8-byte header (u32 n, u32 reserved = 0, little endian) followed by
//         n*n little-endian float64 values in row-major order.
//
// The format is selected by the file extension.

#include <filesystem>

#include "anderson/torus_grid.hpp"

namespace anderson {

void write_field(const GridField& u, const std::filesystem::path& path);
GridField read_field(const std::filesystem::path& path);

}  // namespace anderson
