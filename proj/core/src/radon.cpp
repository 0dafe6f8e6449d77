#include "bsgd/radon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace bsgd {

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols || y.size() != rows) throw InputError("SparseMatrix::multiply: size mismatch");
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += values[k] * x[col_index[k]];
    y[i] = s;
  }
}

void SparseMatrix::multiply_transpose_add(std::span<const double> g, std::span<double> x) const {
  if (x.size() != cols || g.size() != rows)
    throw InputError("SparseMatrix::multiply_transpose_add: size mismatch");
  for (std::size_t i = 0; i < rows; ++i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) x[col_index[k]] += values[k] * gi;
  }
}

namespace {

constexpr double kAxisTolerance = 1e-12;

struct RayGeometry {
  std::size_t rows;
  std::size_t cols;
  double wx;
  double wy;
};

// Entry/exit parameters of the line o + t d inside [-1, 1]^2 (Liang-Barsky).
bool clip_to_square(double ox, double oy, double dx, double dy, double& t0, double& t1) {
  t0 = -std::numeric_limits<double>::infinity();
  t1 = std::numeric_limits<double>::infinity();
  const double o[2] = {ox, oy};
  const double d[2] = {dx, dy};
  for (int a = 0; a < 2; ++a) {
    if (std::abs(d[a]) < kAxisTolerance) {
      if (o[a] < -1.0 || o[a] > 1.0) return false;
      continue;
    }
    double lo = (-1.0 - o[a]) / d[a];
    double hi = (1.0 - o[a]) / d[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  return t1 > t0;
}

// Index of the grid line coinciding with coordinate c (lines at -1 + m w), or -1.
long edge_index(double c, double w, std::size_t n) {
  const double m = (c + 1.0) / w;
  const double rounded = std::round(m);
  if (std::abs(m - rounded) < 1e-9 && rounded >= 0.0 && rounded <= static_cast<double>(n))
    return static_cast<long>(rounded);
  return -1;
}

// Accumulates the intersection lengths of one ray into `row` as (pixel, length).
void trace_ray(const RayGeometry& g, double theta, double s,
               std::vector<std::pair<std::uint32_t, double>>& row) {
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  const double ox = s * c;
  const double oy = s * sn;
  const double dx = -sn;
  const double dy = c;
  double t0, t1;
  if (!clip_to_square(ox, oy, dx, dy, t0, t1)) return;

  auto add = [&](long i, long j, double len) {
    if (i < 0 || j < 0 || i >= static_cast<long>(g.rows) || j >= static_cast<long>(g.cols)) return;
    row.emplace_back(static_cast<std::uint32_t>(i * static_cast<long>(g.cols) + j), len);
  };

  // Rays running exactly along a pixel edge.
  if (std::abs(dx) < kAxisTolerance) {
    const long m = edge_index(ox, g.wx, g.cols);
    if (m >= 0) {
      for (std::size_t i = 0; i < g.rows; ++i) {
        add(static_cast<long>(i), m - 1, 0.5 * g.wy);
        add(static_cast<long>(i), m, 0.5 * g.wy);
      }
      return;
    }
  }
  if (std::abs(dy) < kAxisTolerance) {
    const long m = edge_index(oy, g.wy, g.rows);
    if (m >= 0) {
      // Horizontal line y = -1 + m wy separates rows (rows - m - 1) and (rows - m).
      const long below = static_cast<long>(g.rows) - m;
      for (std::size_t j = 0; j < g.cols; ++j) {
        add(below - 1, static_cast<long>(j), 0.5 * g.wx);
        add(below, static_cast<long>(j), 0.5 * g.wx);
      }
      return;
    }
  }

  std::vector<double> ts;
  ts.reserve(g.rows + g.cols + 4);
  ts.push_back(t0);
  ts.push_back(t1);
  if (std::abs(dx) >= kAxisTolerance) {
    for (std::size_t m = 0; m <= g.cols; ++m) {
      const double t = (-1.0 + static_cast<double>(m) * g.wx - ox) / dx;
      if (t > t0 && t < t1) ts.push_back(t);
    }
  }
  if (std::abs(dy) >= kAxisTolerance) {
    for (std::size_t m = 0; m <= g.rows; ++m) {
      const double t = (-1.0 + static_cast<double>(m) * g.wy - oy) / dy;
      if (t > t0 && t < t1) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double len = ts[k + 1] - ts[k];
    if (len <= 1e-14) continue;
    const double tm = 0.5 * (ts[k] + ts[k + 1]);
    const double x = ox + tm * dx;
    const double y = oy + tm * dy;
    long j = static_cast<long>(std::floor((x + 1.0) / g.wx));
    long i = static_cast<long>(std::floor((1.0 - y) / g.wy));
    j = std::clamp(j, 0L, static_cast<long>(g.cols) - 1);
    i = std::clamp(i, 0L, static_cast<long>(g.rows) - 1);
    add(i, j, len);
  }
}

SparseMatrix assemble(const RayGeometry& g, double theta, std::size_t n_det) {
  SparseMatrix m;
  m.rows = n_det;
  m.cols = g.rows * g.cols;
  m.row_ptr.reserve(n_det + 1);
  m.row_ptr.push_back(0);
  std::vector<std::pair<std::uint32_t, double>> row;
  for (std::size_t k = 0; k < n_det; ++k) {
    row.clear();
    const double s = -1.0 + (static_cast<double>(k) + 0.5) * 2.0 / static_cast<double>(n_det);
    trace_ray(g, theta, s, row);
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t e = 0; e < row.size();) {
      const std::uint32_t col = row[e].first;
      double len = 0.0;
      while (e < row.size() && row[e].first == col) len += row[e++].second;
      m.col_index.push_back(col);
      m.values.push_back(len);
    }
    m.row_ptr.push_back(m.values.size());
  }
  return m;
}

}  // namespace

RadonSystem RadonSystem::build(std::size_t rows, std::size_t cols, std::size_t n_angles,
                               std::size_t n_detectors) {
  if (rows == 0 || cols == 0) throw InputError("build_radon: zero-sized image");
  if (n_angles == 0) throw InputError("build_radon: need at least one angle");
  if (n_detectors == 0) throw InputError("build_radon: need at least one detector");
  RadonSystem sys;
  sys.rows_ = rows;
  sys.cols_ = cols;
  sys.n_detectors_ = n_detectors;
  const RayGeometry g{rows, cols, 2.0 / static_cast<double>(cols), 2.0 / static_cast<double>(rows)};
  sys.angles_.reserve(n_angles);
  sys.matrices_.reserve(n_angles);
  for (std::size_t a = 0; a < n_angles; ++a) {
    const double theta = std::numbers::pi * static_cast<double>(a) / static_cast<double>(n_angles);
    sys.angles_.push_back(theta);
    sys.matrices_.push_back(assemble(g, theta, n_detectors));
  }
  return sys;
}

double RadonSystem::detector_position(std::size_t k) const {
  return -1.0 + (static_cast<double>(k) + 0.5) * 2.0 / static_cast<double>(n_detectors_);
}

void RadonSystem::project(std::size_t angle, std::span<const double> image,
                          std::span<double> out) const {
  matrix(angle).multiply(image, out);
}

void RadonSystem::backproject_add(std::size_t angle, std::span<const double> g,
                                  std::span<double> image) const {
  matrix(angle).multiply_transpose_add(g, image);
}

}  // namespace bsgd
