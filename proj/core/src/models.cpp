#include "bsgd/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bsgd/operator_estimates.hpp"

namespace bsgd {

SchlierenModel::SchlierenModel(std::shared_ptr<const RadonSystem> radon)
    : radon_(std::move(radon)) {
  if (!radon_) throw InputError("SchlierenModel: null Radon system");
  shape_ = radon_->image_shape();
}

void SchlierenModel::apply_unit(std::size_t unit, std::span<const double> x,
                                std::span<double> out) const {
  radon_->project(unit, x, out);
  for (double& v : out) v *= v;
}

void SchlierenModel::derivative_unit(std::size_t unit, std::span<const double> x,
                                     std::span<const double> h, std::span<double> out) const {
  std::vector<double> rx(out.size());
  radon_->project(unit, x, rx);
  radon_->project(unit, h, out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= 2.0 * rx[k];
}

void SchlierenModel::adjoint_unit_add(std::size_t unit, std::span<const double> x,
                                      std::span<const double> g, std::span<double> out) const {
  std::vector<double> weighted(radon_->n_detectors());
  radon_->project(unit, x, weighted);
  for (std::size_t k = 0; k < weighted.size(); ++k) weighted[k] = 2.0 * weighted[k] * g[k];
  radon_->backproject_add(unit, weighted, out);
}

std::shared_ptr<const SchlierenModel> make_schlieren_model(std::size_t rows, std::size_t cols,
                                                           std::size_t n_angles,
                                                           std::size_t n_detectors) {
  auto radon = std::make_shared<const RadonSystem>(
      RadonSystem::build(rows, cols, n_angles, n_detectors));
  return std::make_shared<const SchlierenModel>(std::move(radon));
}

BenchmarkModel::BenchmarkModel(std::vector<double> diagonal, double beta)
    : diagonal_(std::move(diagonal)), beta_(beta) {
  if (diagonal_.empty()) throw InputError("BenchmarkModel: empty diagonal");
  for (double a : diagonal_)
    if (!(a > 0.0) || !std::isfinite(a)) throw InputError("BenchmarkModel: diagonal must be positive");
  if (!std::isfinite(beta_)) throw InputError("BenchmarkModel: non-finite beta");
  shape_ = {diagonal_.size()};
}

void BenchmarkModel::apply_unit(std::size_t unit, std::span<const double> x,
                                std::span<double> out) const {
  const double a = diagonal_[unit];
  const double v = x[unit];
  out[0] = a * v + beta_ * a * v * v;
}

void BenchmarkModel::derivative_unit(std::size_t unit, std::span<const double> x,
                                     std::span<const double> h, std::span<double> out) const {
  out[0] = diagonal_[unit] * (1.0 + 2.0 * beta_ * x[unit]) * h[unit];
}

void BenchmarkModel::adjoint_unit_add(std::size_t unit, std::span<const double> x,
                                      std::span<const double> g, std::span<double> out) const {
  out[unit] += diagonal_[unit] * (1.0 + 2.0 * beta_ * x[unit]) * g[0];
}

double BenchmarkModel::diag_min() const { return *std::min_element(diagonal_.begin(), diagonal_.end()); }
double BenchmarkModel::diag_max() const { return *std::max_element(diagonal_.begin(), diagonal_.end()); }

double BenchmarkModel::gamma_bound(double radius) const {
  const double t = 2.0 * std::abs(beta_) * radius;
  if (t >= 1.0) return std::numeric_limits<double>::infinity();
  return t / (1.0 - t);
}

double BenchmarkModel::lipschitz_bound(double radius) const {
  return diag_max() * (1.0 + 2.0 * std::abs(beta_) * radius);
}

ForwardProblem build_benchmark(std::size_t dim, double diag_min, double diag_max,
                               double nonlinearity_beta, const BenchmarkOptions& options) {
  if (dim == 0) throw InputError("build_benchmark: dim must be positive");
  if (!(diag_min > 0.0) || !(diag_max >= diag_min))
    throw InputError("build_benchmark: need 0 < diag_min <= diag_max");
  if (!(options.working_radius > 0.0)) throw InputError("build_benchmark: working radius must be positive");
  std::vector<double> diagonal(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const double t = dim == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(dim - 1);
    diagonal[j] = diag_min + (diag_max - diag_min) * t;
  }
  auto model = std::make_shared<const BenchmarkModel>(std::move(diagonal), nonlinearity_beta);
  ForwardProblem problem(model, options.batch_size);

  OperatorBounds bounds;
  bounds.L_max = model->lipschitz_bound(options.working_radius);
  if (nonlinearity_beta == 0.0) {
    bounds.gamma = 0.0;
    bounds.gamma_estimated = false;
  } else {
    const GridVector origin = GridVector::zeros(model->domain_shape());
    const double sampled = estimate_tcc_gamma(problem, origin, options.working_radius,
                                              options.gamma_samples, options.gamma_seed, options.r_Y);
    if (!(sampled < 0.5)) {
      std::ostringstream msg;
      msg << "build_benchmark: estimated tangential cone constant " << sampled
          << " is not below 1/2 on the working ball of radius " << options.working_radius;
      throw RuntimeFailure(msg.str());
    }
    const double proven = model->gamma_bound(options.working_radius);
    bounds.gamma = std::isfinite(proven) ? proven : sampled;
    bounds.gamma_estimated = !std::isfinite(proven);
  }
  return problem.with_bounds(bounds);
}

}  // namespace bsgd
