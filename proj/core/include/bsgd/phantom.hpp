#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bsgd/grid_vector.hpp"

namespace bsgd {

/// A disk in image coordinates: the image covers [-1, 1]^2 with x growing to
/// the right (columns) and y growing upwards (row 0 is the top edge).
struct Disk {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  double amplitude = 1.0;
};

/// Pixels whose centers lie inside a disk take its amplitude (later disks win),
/// all others the background. Parts of disks outside the image are clipped.
GridVector make_disk_phantom(const Shape& shape, const std::vector<Disk>& disks,
                             double background = 0.0);

enum class PhantomKind { sparse_blobs };
std::string to_string(PhantomKind kind);
PhantomKind parse_phantom_kind(const std::string& name);

/// Random disks of constant amplitude on a zero background. Radii are drawn so
/// that the blobs cover at most 15% of the image, keeping the phantom sparse.
/// Deterministic given the seed.
GridVector make_phantom(PhantomKind kind, const Shape& shape, std::size_t n_blobs, double amplitude,
                        std::uint64_t seed);

/// Fraction of entries that differ from `background`.
double nonzero_fraction(const GridVector& image, double background = 0.0);

}  // namespace bsgd
