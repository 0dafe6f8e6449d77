#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bsgd/grid_vector.hpp"

namespace bsgd {

enum class NoiseKind { none, gaussian, salt_pepper, impulsive };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  /// Relative magnitude (gaussian, impulsive).
  double epsilon = 0.0;
  /// Corruption fraction in (0, 1) (salt_pepper, impulsive).
  double kappa = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// y + epsilon ||y||_inf xi with i.i.d. standard normal xi; the sup norm is
/// taken over all blocks stacked together.
BlockList add_gaussian(const BlockList& y, double epsilon, std::uint64_t seed);

/// Each sample kept with probability 1 - kappa, otherwise replaced by the
/// global maximum or minimum of y with probability kappa / 2 each.
BlockList add_salt_pepper(const BlockList& y, double kappa, std::uint64_t seed);

/// Each block kept with probability 1 - kappa, otherwise perturbed by
/// epsilon (max_i ||y_i||_inf) xi_i.
BlockList add_impulsive(const BlockList& y, double kappa, double epsilon, std::uint64_t seed);

BlockList apply_noise(const BlockList& y, const NoiseSpec& spec);

struct NoiseLevel {
  std::vector<double> per_block;
  double max = 0.0;
};

/// delta_i = ||y_i - y_i^delta||_{r_Y} and delta = max_i delta_i.
NoiseLevel noise_level(const BlockList& y_exact, const BlockList& y_noisy, double r_Y);

}  // namespace bsgd
