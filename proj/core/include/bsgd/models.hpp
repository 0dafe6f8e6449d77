#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "bsgd/forward_problem.hpp"
#include "bsgd/radon.hpp"

namespace bsgd {

/// Schlieren operator: each unit is one projection angle, F_a(x) = (R_a x)^2
/// componentwise, F_a'(x) h = 2 (R_a x)(R_a h), adjoint R_a^T (2 (R_a x) g).
class SchlierenModel final : public ForwardModel {
 public:
  explicit SchlierenModel(std::shared_ptr<const RadonSystem> radon);

  std::string kind() const override { return "schlieren"; }
  const Shape& domain_shape() const override { return shape_; }
  std::size_t num_units() const override { return radon_->n_angles(); }
  std::size_t unit_size() const override { return radon_->n_detectors(); }

  void apply_unit(std::size_t unit, std::span<const double> x, std::span<double> out) const override;
  void derivative_unit(std::size_t unit, std::span<const double> x, std::span<const double> h,
                       std::span<double> out) const override;
  void adjoint_unit_add(std::size_t unit, std::span<const double> x, std::span<const double> g,
                        std::span<double> out) const override;

  const RadonSystem& radon() const { return *radon_; }

 private:
  std::shared_ptr<const RadonSystem> radon_;
  Shape shape_;
};

/// Synthetic componentwise operator F_j(x) = a_j x_j + beta a_j x_j^2.
///
/// On the ball |x_j| <= R the tangential cone constant is bounded by
/// 2|beta|R / (1 - 2|beta|R) and ||F_i'(x)|| by a_max (1 + 2|beta|R).
class BenchmarkModel final : public ForwardModel {
 public:
  BenchmarkModel(std::vector<double> diagonal, double beta);

  std::string kind() const override { return "benchmark"; }
  const Shape& domain_shape() const override { return shape_; }
  std::size_t num_units() const override { return diagonal_.size(); }
  std::size_t unit_size() const override { return 1; }

  void apply_unit(std::size_t unit, std::span<const double> x, std::span<double> out) const override;
  void derivative_unit(std::size_t unit, std::span<const double> x, std::span<const double> h,
                       std::span<double> out) const override;
  void adjoint_unit_add(std::size_t unit, std::span<const double> x, std::span<const double> g,
                        std::span<double> out) const override;

  const std::vector<double>& diagonal() const { return diagonal_; }
  double beta() const { return beta_; }
  double diag_min() const;
  double diag_max() const;

  /// Proven tangential cone constant on {|x_j| <= radius}; infinite if the
  /// bound does not apply (2|beta| radius >= 1).
  double gamma_bound(double radius) const;
  double lipschitz_bound(double radius) const;

 private:
  std::vector<double> diagonal_;
  double beta_;
  Shape shape_;
};

std::shared_ptr<const SchlierenModel> make_schlieren_model(std::size_t rows, std::size_t cols,
                                                           std::size_t n_angles,
                                                           std::size_t n_detectors);

struct BenchmarkOptions {
  std::size_t batch_size = 1;
  /// l2 radius of the working ball around the origin used for the bounds.
  double working_radius = 1.0;
  std::size_t gamma_samples = 200;
  std::uint64_t gamma_seed = 0x5eed;
  double r_Y = 2.0;
};

/// Builds the synthetic benchmark with diagonal entries equispaced on
/// [diag_min, diag_max]. The sampled tangential cone constant on the working
/// ball must stay below 1/2, otherwise RuntimeFailure reports the estimate.
ForwardProblem build_benchmark(std::size_t dim, double diag_min, double diag_max,
                               double nonlinearity_beta, const BenchmarkOptions& options = {});

}  // namespace bsgd
