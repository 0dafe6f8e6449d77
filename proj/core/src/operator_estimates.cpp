#include "bsgd/operator_estimates.hpp"

#include <algorithm>
#include <cmath>

#include "bsgd/geometry.hpp"

namespace bsgd {

GridVector sample_ball(const GridVector& center, double radius, CounterRng& rng) {
  const std::size_t n = center.size();
  std::vector<double> dir(n);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& d : dir) {
      d = rng.normal();
      norm2 += d * d;
    }
  } while (norm2 == 0.0);
  const double scale =
      radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n)) / std::sqrt(norm2);
  for (std::size_t j = 0; j < n; ++j) dir[j] = center[j] + scale * dir[j];
  return GridVector(std::move(dir), center.shape());
}

double estimate_tcc_gamma(const ForwardProblem& problem, const GridVector& ball_center,
                          double ball_radius, std::size_t n_samples, std::uint64_t rng_seed,
                          double r_Y) {
  if (n_samples == 0) throw InputError("estimate_tcc_gamma: need at least one sample");
  CounterRng rng(rng_seed, 0x7cc);
  double worst = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const GridVector x = sample_ball(ball_center, ball_radius, rng);
    const GridVector xt = sample_ball(ball_center, ball_radius, rng);
    const GridVector step = x - xt;
    for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
      const GridVector diff = problem.apply(i, x) - problem.apply(i, xt);
      const double den = lr_norm(diff, r_Y);
      if (den < 1e-14) continue;
      const GridVector lin = problem.derivative(i, x, step);
      const double num = lr_norm(diff - lin, r_Y);
      worst = std::max(worst, num / den);
    }
  }
  return worst;
}

double estimate_lipschitz_Lmax(const ForwardProblem& problem, const GridVector& ball_center,
                               double ball_radius, std::size_t n_samples, std::uint64_t rng_seed,
                               std::size_t iterations) {
  if (n_samples == 0) throw InputError("estimate_lipschitz_Lmax: need at least one sample");
  CounterRng rng(rng_seed, 0x11f);
  const Shape& shape = problem.domain_shape();
  const std::size_t n = shape_size(shape);
  double worst = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const GridVector x = sample_ball(ball_center, ball_radius, rng);
    for (std::size_t i = 0; i < problem.num_blocks(); ++i) {
      std::vector<double> v(n);
      for (auto& e : v) e = rng.normal();
      double nv = lr_norm(v, 2.0);
      for (auto& e : v) e /= nv;
      double sigma2 = 0.0;
      for (std::size_t it = 0; it < iterations; ++it) {
        const GridVector h(v, shape);
        const GridVector w = problem.derivative(i, x, h);
        const DualVector u = problem.adjoint(i, x, as_dual(w));
        sigma2 = lr_norm(u, 2.0);
        if (sigma2 == 0.0) break;
        for (std::size_t j = 0; j < n; ++j) v[j] = u[j] / sigma2;
      }
      worst = std::max(worst, std::sqrt(sigma2));
    }
  }
  return worst;
}

}  // namespace bsgd
