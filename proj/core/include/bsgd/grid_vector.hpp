#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bsgd/errors.hpp"

namespace bsgd {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {
void validate_array(std::span<const double> values, const Shape& shape, const char* what);
}

/// Dense row-major array of finite reals with an explicit shape.
///
/// `Tag` separates primal elements (of X or Y_i) from dual elements (of X* or
/// Y_i*) so the two cannot be mixed up at compile time; the storage is the same.
template <class Tag>
class BasicArray {
 public:
  BasicArray() = default;

  BasicArray(std::vector<double> values, Shape shape)
      : values_(std::move(values)), shape_(std::move(shape)) {
    detail::validate_array(values_, shape_, Tag::name);
  }

  /// One-dimensional array.
  explicit BasicArray(std::vector<double> values)
      : BasicArray(values, Shape{values.size()}) {}

  static BasicArray zeros(const Shape& shape) {
    return BasicArray(std::vector<double>(shape_size(shape), 0.0), shape);
  }

  static BasicArray filled(const Shape& shape, double value) {
    return BasicArray(std::vector<double>(shape_size(shape), value), shape);
  }

  std::span<const double> values() const { return values_; }
  const std::vector<double>& data() const { return values_; }
  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }

  bool same_shape(const BasicArray& other) const { return shape_ == other.shape_; }

  friend bool operator==(const BasicArray&, const BasicArray&) = default;

 private:
  std::vector<double> values_;
  Shape shape_;
};

struct PrimalTag {
  static constexpr const char* name = "GridVector";
};
struct DualTag {
  static constexpr const char* name = "DualVector";
};

/// Element of a discretised L^r space (x, x†, residuals, data blocks).
using GridVector = BasicArray<PrimalTag>;
/// Element of the dual space L^{r*} (duality map images, gradients).
using DualVector = BasicArray<DualTag>;

/// Dual pairing <w, v> = sum_j w_j v_j.
double pairing(const DualVector& w, const GridVector& v);

double dot(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> values);

GridVector operator+(const GridVector& a, const GridVector& b);
GridVector operator-(const GridVector& a, const GridVector& b);
GridVector operator*(double s, const GridVector& a);
DualVector operator+(const DualVector& a, const DualVector& b);
DualVector operator-(const DualVector& a, const DualVector& b);
DualVector operator*(double s, const DualVector& a);

/// Reinterpret the raw values with a new tag; shapes are kept.
DualVector as_dual(const GridVector& v);
GridVector as_primal(const DualVector& w);

/// A list of data blocks y_1, ..., y_N (or measurement units).
using BlockList = std::vector<GridVector>;

}  // namespace bsgd
