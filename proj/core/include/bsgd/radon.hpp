#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bsgd/grid_vector.hpp"

namespace bsgd {

/// Compressed sparse row matrix with double entries.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> col_index;
  std::vector<double> values;

  std::size_t nonzeros() const { return values.size(); }
  /// y = A x. Each row is summed sequentially in column order.
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// x += A^T g, visiting rows in order.
  void multiply_transpose_add(std::span<const double> g, std::span<double> x) const;
};

/// Parallel-beam discrete Radon transform on a rows x cols image.
///
/// The image covers the square [-1, 1]^2 with row 0 at the top (y = 1) and
/// column 0 on the left (x = -1). For angle theta the detector coordinate s
/// runs along (cos theta, sin theta) and rays travel along
/// (-sin theta, cos theta); detector bin centres are equispaced on [-1, 1].
/// Entries are exact ray/pixel intersection lengths. A ray that runs exactly
/// along a pixel edge splits its length evenly between the two neighbours.
class RadonSystem {
 public:
  /// Equidistant angles {0, pi/n, ..., (n-1) pi/n}.
  static RadonSystem build(std::size_t rows, std::size_t cols, std::size_t n_angles,
                           std::size_t n_detectors);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Shape image_shape() const { return {rows_, cols_}; }
  std::size_t pixel_count() const { return rows_ * cols_; }
  std::size_t n_detectors() const { return n_detectors_; }
  std::size_t n_angles() const { return angles_.size(); }
  const std::vector<double>& angles() const { return angles_; }
  double detector_position(std::size_t k) const;

  const SparseMatrix& matrix(std::size_t angle) const { return matrices_.at(angle); }

  /// out (n_detectors) = R_angle x.
  void project(std::size_t angle, std::span<const double> image, std::span<double> out) const;
  /// image += R_angle^T g.
  void backproject_add(std::size_t angle, std::span<const double> g, std::span<double> image) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t n_detectors_ = 0;
  std::vector<double> angles_;
  std::vector<SparseMatrix> matrices_;
};

}  // namespace bsgd
