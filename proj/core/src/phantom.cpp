#include "bsgd/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bsgd/errors.hpp"
#include "bsgd/rng.hpp"

namespace bsgd {

GridVector make_disk_phantom(const Shape& shape, const std::vector<Disk>& disks, double background) {
  if (shape.size() != 2 || shape[0] == 0 || shape[1] == 0)
    throw InputError("phantom shape must be (rows, cols) with positive entries, got " +
                     shape_string(shape));
  if (!std::isfinite(background)) throw InputError("phantom background must be finite");
  for (const auto& d : disks) {
    if (!(d.radius >= 0.0) || !std::isfinite(d.cx) || !std::isfinite(d.cy) ||
        !std::isfinite(d.amplitude))
      throw InputError("disk parameters must be finite with nonnegative radius");
  }
  const std::size_t rows = shape[0];
  const std::size_t cols = shape[1];
  std::vector<double> values(rows * cols, background);
  for (std::size_t i = 0; i < rows; ++i) {
    const double y = 1.0 - (static_cast<double>(i) + 0.5) * 2.0 / static_cast<double>(rows);
    for (std::size_t j = 0; j < cols; ++j) {
      const double x = -1.0 + (static_cast<double>(j) + 0.5) * 2.0 / static_cast<double>(cols);
      for (const auto& d : disks) {
        const double dx = x - d.cx;
        const double dy = y - d.cy;
        if (dx * dx + dy * dy <= d.radius * d.radius) values[i * cols + j] = d.amplitude;
      }
    }
  }
  return GridVector(std::move(values), shape);
}

std::string to_string(PhantomKind) { return "sparse_blobs"; }

PhantomKind parse_phantom_kind(const std::string& name) {
  if (name == "sparse_blobs") return PhantomKind::sparse_blobs;
  throw InputError("unknown phantom kind '" + name + "'");
}

GridVector make_phantom(PhantomKind, const Shape& shape, std::size_t n_blobs, double amplitude,
                        std::uint64_t seed) {
  if (!std::isfinite(amplitude)) throw InputError("phantom amplitude must be finite");
  CounterRng rng(seed, 0xb10b);
  std::vector<Disk> disks;
  if (n_blobs > 0) {
    // Total disk area <= 15% of the square [-1, 1]^2.
    const double r_max =
        std::min(0.18, std::sqrt(0.15 * 4.0 / (std::numbers::pi * static_cast<double>(n_blobs))));
    const double r_min = 0.5 * r_max;
    for (std::size_t b = 0; b < n_blobs; ++b) {
      Disk d;
      d.cx = -0.75 + 1.5 * rng.uniform();
      d.cy = -0.75 + 1.5 * rng.uniform();
      d.radius = r_min + (r_max - r_min) * rng.uniform();
      d.amplitude = amplitude;
      disks.push_back(d);
    }
  }
  return make_disk_phantom(shape, disks, 0.0);
}

double nonzero_fraction(const GridVector& image, double background) {
  if (image.size() == 0) return 0.0;
  const auto v = image.values();
  const auto n = std::count_if(v.begin(), v.end(), [&](double x) { return x != background; });
  return static_cast<double>(n) / static_cast<double>(image.size());
}

}  // namespace bsgd
