#pragma once

#include <filesystem>
#include <iosfwd>

#include "bsgd/grid_vector.hpp"

namespace bsgd {

/// BSGD-ARRAY v1: an ASCII header line `BSGD <ndim> <dim1> ... <dimN>\n`
/// followed by the row-major payload as little-endian IEEE-754 float64.
void write_array(std::ostream& out, const GridVector& v);
GridVector read_array(std::istream& in);

void write_array(const std::filesystem::path& path, const GridVector& v);
GridVector read_array(const std::filesystem::path& path);

}  // namespace bsgd
