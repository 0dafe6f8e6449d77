#include "bsgd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bsgd {

namespace {

constexpr double kConjugateTolerance = 1e-12;

double conjugate(double e) { return e / (e - 1.0); }

void require_exponent(double e, const char* name) {
  if (!(e > 1.0) || !std::isfinite(e))
    throw InputError(std::string(name) + " must be a finite exponent > 1, got " + std::to_string(e));
}

}  // namespace

GeometryParams GeometryParams::make(double r, double p) {
  require_exponent(r, "r");
  require_exponent(p, "p");
  std::optional<double> convexity;
  std::optional<double> smoothness;
  if (r == 2.0 && p == 2.0) {
    // Hilbert case: D(z, w) = 1/2 ||z - w||^2 in both X and X*.
    convexity = 1.0;
    smoothness = 1.0;
  }
  return GeometryParams(r, p, conjugate(r), conjugate(p), convexity, smoothness);
}

GeometryParams::GeometryParams(double r, double p, double r_star, double p_star,
                               std::optional<double> convexity_constant,
                               std::optional<double> dual_smoothness_constant)
    : r_(r), p_(p), r_star_(r_star), p_star_(p_star),
      convexity_(convexity_constant), dual_smoothness_(dual_smoothness_constant) {
  require_exponent(r, "r");
  require_exponent(p, "p");
  require_exponent(r_star, "r_star");
  require_exponent(p_star, "p_star");
  if (std::abs(1.0 / r + 1.0 / r_star - 1.0) > kConjugateTolerance)
    throw InputError("r and r_star are not conjugate");
  if (std::abs(1.0 / p + 1.0 / p_star - 1.0) > kConjugateTolerance)
    throw InputError("p and p_star are not conjugate");
  if (convexity_ && !(*convexity_ > 0.0)) throw InputError("C_p must be positive");
  if (dual_smoothness_ && !(*dual_smoothness_ > 0.0)) throw InputError("G_p* must be positive");
}

GeometryParams GeometryParams::dual() const {
  return GeometryParams(r_star_, p_star_, r_, p_, dual_smoothness_, convexity_);
}

bool GeometryParams::is_practice_mode() const { return p_ < std::max(r_, 2.0); }

double lr_norm(std::span<const double> v, double r) {
  if (!(r > 1.0)) throw InputError("lr_norm: exponent must be > 1 or infinite");
  double peak = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw InputError("lr_norm: non-finite entry");
    peak = std::max(peak, std::abs(x));
  }
  if (peak == 0.0 || std::isinf(r)) return peak;
  // Scale by the peak so large or tiny entries neither overflow nor underflow.
  double sum = 0.0;
  if (r == 2.0) {
    for (double x : v) {
      const double t = x / peak;
      sum += t * t;
    }
    return peak * std::sqrt(sum);
  }
  for (double x : v) {
    if (x != 0.0) sum += std::pow(std::abs(x) / peak, r);
  }
  return peak * std::pow(sum, 1.0 / r);
}

double lr_norm(const GridVector& v, double r) { return lr_norm(v.values(), r); }
double lr_norm(const DualVector& v, double r) { return lr_norm(v.values(), r); }

void apply_duality_kernel(std::span<const double> v, double r, double p, std::span<double> out) {
  if (out.size() != v.size()) throw InputError("duality map: output length mismatch");
  const double norm = lr_norm(v, r);
  if (norm == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double gauge_power = p - r;
  const double entry_power = r - 1.0;
  // Exact shortcuts keep J_2 on L^2 the identity to the last bit.
  if (gauge_power == 0.0 && entry_power == 1.0) {
    std::copy(v.begin(), v.end(), out.begin());
    return;
  }
  const double log_factor = gauge_power * std::log(norm);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double a = std::abs(v[j]);
    if (a == 0.0) {
      out[j] = 0.0;
      continue;
    }
    const double magnitude = std::exp(log_factor + entry_power * std::log(a));
    out[j] = std::copysign(magnitude, v[j]);
  }
}

DualVector duality_map(const GridVector& v, const GeometryParams& g) {
  std::vector<double> out(v.size());
  apply_duality_kernel(v.values(), g.r(), g.p(), out);
  return DualVector(std::move(out), v.shape());
}

GridVector inverse_duality_map(const DualVector& w, const GeometryParams& g) {
  std::vector<double> out(w.size());
  apply_duality_kernel(w.values(), g.r_star(), g.p_star(), out);
  return GridVector(std::move(out), w.shape());
}

double bregman_distance(const GridVector& z, const GridVector& w, const GeometryParams& g) {
  if (!z.same_shape(w))
    throw InputError("bregman_distance: shape mismatch " + shape_string(z.shape()) + " vs " +
                     shape_string(w.shape()));
  if (z == w) return 0.0;
  if (g.is_hilbert()) {
    double s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double d = z[j] - w[j];
      s += d * d;
    }
    return 0.5 * s;
  }
  const double nz = lr_norm(z, g.r());
  const double nw = lr_norm(w, g.r());
  const double value = std::pow(nz, g.p()) / g.p_star() + std::pow(nw, g.p()) / g.p() -
                       pairing(duality_map(z, g), w);
  return std::max(0.0, value);
}

double product_norm(std::span<const GridVector> blocks, double r_block, double r_outer) {
  if (blocks.empty()) throw InputError("product_norm: empty block list");
  std::vector<double> norms;
  norms.reserve(blocks.size());
  for (const auto& b : blocks) norms.push_back(lr_norm(b, r_block));
  return lr_norm(norms, r_outer);
}

}  // namespace bsgd
