#pragma once

#include <limits>
#include <optional>
#include <span>

#include "bsgd/grid_vector.hpp"

namespace bsgd {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Exponents of the L^r space and of the power-type gauge t -> t^{p-1}, with
/// their conjugates stored explicitly so J_p and its inverse use identical
/// numbers.
class GeometryParams {
 public:
  /// Builds the parameters from (r, p); conjugates are computed once here.
  static GeometryParams make(double r, double p);

  /// Builds the parameters from explicitly given conjugates. Throws
  /// InputError unless 1/r + 1/r_star = 1 and 1/p + 1/p_star = 1 to 1e-12.
  GeometryParams(double r, double p, double r_star, double p_star,
                 std::optional<double> convexity_constant = std::nullopt,
                 std::optional<double> dual_smoothness_constant = std::nullopt);

  double r() const { return r_; }
  double p() const { return p_; }
  double r_star() const { return r_star_; }
  double p_star() const { return p_star_; }

  /// C_p in D(z, w) >= (C_p / p) ||w - z||^p; known in the Hilbert case only.
  std::optional<double> convexity_constant() const { return convexity_; }
  /// G_{p*} in D*(z*, w*) <= (G_{p*} / p*) ||w* - z*||^{p*}.
  std::optional<double> dual_smoothness_constant() const { return dual_smoothness_; }

  /// The geometry of the dual space: (r*, p*) with (r, p) as conjugates.
  GeometryParams dual() const;

  bool is_hilbert() const { return r_ == 2.0 && p_ == 2.0; }
  /// L^r is (r v 2)-convex; gauges with p < r v 2 carry no convergence
  /// guarantee and are flagged as practice mode.
  bool is_practice_mode() const;

 private:
  double r_;
  double p_;
  double r_star_;
  double p_star_;
  std::optional<double> convexity_;
  std::optional<double> dual_smoothness_;
};

/// (sum_j |v_j|^r)^{1/r}, or max_j |v_j| when r is infinite. Unit cell measure.
double lr_norm(std::span<const double> v, double r);
double lr_norm(const GridVector& v, double r);
double lr_norm(const DualVector& v, double r);

/// J_p on L^r: ||v||_r^{p-r} |v_j|^{r-1} sign(v_j); J_p(0) = 0.
DualVector duality_map(const GridVector& v, const GeometryParams& g);

/// J_{p*} on L^{r*}, the inverse of duality_map.
GridVector inverse_duality_map(const DualVector& w, const GeometryParams& g);

/// Raw-span kernel shared by both maps: out_j = ||v||_r^{p-r} |v_j|^{r-1} sign(v_j).
void apply_duality_kernel(std::span<const double> v, double r, double p, std::span<double> out);

/// D(z, w) = (1/p*)||z||^p + (1/p)||w||^p - <J_p(z), w>, clamped at zero.
double bregman_distance(const GridVector& z, const GridVector& w, const GeometryParams& g);

/// Outer l^{r_outer} norm of the block L^{r_Y} norms.
double product_norm(std::span<const GridVector> blocks, double r_block, double r_outer);

}  // namespace bsgd
