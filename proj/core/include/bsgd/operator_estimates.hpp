#pragma once

#include <cstdint>

#include "bsgd/forward_problem.hpp"
#include "bsgd/rng.hpp"

namespace bsgd {

/// Largest observed ratio
///   ||F_i(x) - F_i(x~) - F_i'(x)(x - x~)|| / ||F_i(x) - F_i(x~)||
/// over pairs drawn uniformly from the l2 ball and over all blocks. A lower
/// bound for the true tangential cone constant. Pairs whose denominator is
/// below 1e-14 are skipped. Norms are L^{r_Y}.
double estimate_tcc_gamma(const ForwardProblem& problem, const GridVector& ball_center,
                          double ball_radius, std::size_t n_samples, std::uint64_t rng_seed,
                          double r_Y = 2.0);

/// max_i ||F_i'(x)|| over sampled x in the ball, each operator norm from
/// `iterations` steps of power iteration on F_i'(x)^* F_i'(x) (Euclidean norms).
double estimate_lipschitz_Lmax(const ForwardProblem& problem, const GridVector& ball_center,
                               double ball_radius, std::size_t n_samples, std::uint64_t rng_seed,
                               std::size_t iterations = 50);

/// A point drawn uniformly from the l2 ball.
GridVector sample_ball(const GridVector& center, double radius, CounterRng& rng);

}  // namespace bsgd
