#include "bsgd/grid_vector.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace bsgd {

std::size_t shape_size(const Shape& shape) {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  out << ')';
  return out.str();
}

namespace detail {
void validate_array(std::span<const double> values, const Shape& shape, const char* what) {
  if (shape_size(shape) != values.size()) {
    throw InputError(std::string(what) + ": shape " + shape_string(shape) + " does not match " +
                     std::to_string(values.size()) + " entries");
  }
  if (!all_finite(values)) throw InputError(std::string(what) + ": non-finite entry");
}
}  // namespace detail

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double pairing(const DualVector& w, const GridVector& v) {
  if (w.shape() != v.shape())
    throw InputError("pairing: shape mismatch " + shape_string(w.shape()) + " vs " +
                     shape_string(v.shape()));
  return dot(w.values(), v.values());
}

namespace {

template <class T, class Op>
T combine(const T& a, const T& b, Op op, const char* what) {
  if (!a.same_shape(b))
    throw InputError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(a[i], b[i]);
  return T(std::move(out), a.shape());
}

template <class T>
T scale(double s, const T& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * a[i];
  return T(std::move(out), a.shape());
}

}  // namespace

GridVector operator+(const GridVector& a, const GridVector& b) { return combine(a, b, std::plus<>(), "add"); }
GridVector operator-(const GridVector& a, const GridVector& b) { return combine(a, b, std::minus<>(), "subtract"); }
GridVector operator*(double s, const GridVector& a) { return scale(s, a); }
DualVector operator+(const DualVector& a, const DualVector& b) { return combine(a, b, std::plus<>(), "add"); }
DualVector operator-(const DualVector& a, const DualVector& b) { return combine(a, b, std::minus<>(), "subtract"); }
DualVector operator*(double s, const DualVector& a) { return scale(s, a); }

DualVector as_dual(const GridVector& v) { return DualVector(v.data(), v.shape()); }
GridVector as_primal(const DualVector& w) { return GridVector(w.data(), w.shape()); }

}  // namespace bsgd
