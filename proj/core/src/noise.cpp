#include "bsgd/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bsgd/geometry.hpp"
#include "bsgd/rng.hpp"

namespace bsgd {

namespace {

// Stream identifiers keep the three generators independent for a given seed.
constexpr std::uint64_t kGaussianStream = 1;
constexpr std::uint64_t kSaltPepperStream = 2;
constexpr std::uint64_t kImpulsiveStream = 3;

double stacked_sup(const BlockList& y) {
  double m = 0.0;
  for (const auto& b : y) m = std::max(m, lr_norm(b, kInfinity));
  return m;
}

void require_kappa(double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw InputError("noise: kappa must lie in (0, 1)");
}

void require_epsilon(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InputError("noise: epsilon must be >= 0");
}

}  // namespace

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::salt_pepper: return "salt_pepper";
    case NoiseKind::impulsive: return "impulsive";
  }
  return "none";
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "none") return NoiseKind::none;
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "salt_pepper") return NoiseKind::salt_pepper;
  if (name == "impulsive") return NoiseKind::impulsive;
  throw InputError("unknown noise kind '" + name + "'");
}

void NoiseSpec::validate() const {
  switch (kind) {
    case NoiseKind::none: break;
    case NoiseKind::gaussian: require_epsilon(epsilon); break;
    case NoiseKind::salt_pepper: require_kappa(kappa); break;
    case NoiseKind::impulsive:
      require_epsilon(epsilon);
      require_kappa(kappa);
      break;
  }
}

BlockList add_gaussian(const BlockList& y, double epsilon, std::uint64_t seed) {
  require_epsilon(epsilon);
  if (epsilon == 0.0) return y;
  const double scale = epsilon * stacked_sup(y);
  CounterRng rng(seed, kGaussianStream);
  BlockList out;
  out.reserve(y.size());
  for (const auto& b : y) {
    std::vector<double> v(b.data());
    for (auto& e : v) e += scale * rng.normal();
    out.emplace_back(std::move(v), b.shape());
  }
  return out;
}

BlockList add_salt_pepper(const BlockList& y, double kappa, std::uint64_t seed) {
  require_kappa(kappa);
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& b : y)
    for (double e : b.values()) {
      hi = std::max(hi, e);
      lo = std::min(lo, e);
    }
  CounterRng rng(seed, kSaltPepperStream);
  BlockList out;
  out.reserve(y.size());
  for (const auto& b : y) {
    std::vector<double> v(b.data());
    for (auto& e : v) {
      const double u = rng.uniform();
      if (u < 0.5 * kappa) {
        e = hi;
      } else if (u < kappa) {
        e = lo;
      }
    }
    out.emplace_back(std::move(v), b.shape());
  }
  return out;
}

BlockList add_impulsive(const BlockList& y, double kappa, double epsilon, std::uint64_t seed) {
  require_kappa(kappa);
  require_epsilon(epsilon);
  const double scale = epsilon * stacked_sup(y);
  CounterRng rng(seed, kImpulsiveStream);
  BlockList out;
  out.reserve(y.size());
  for (const auto& b : y) {
    std::vector<double> v(b.data());
    // The corruption draw and the Gaussian draws are consumed for every block
    // so the decision for block i does not shift the stream of later blocks.
    const bool corrupt = rng.uniform() < kappa;
    for (auto& e : v) {
      const double xi = rng.normal();
      if (corrupt) e += scale * xi;
    }
    out.emplace_back(std::move(v), b.shape());
  }
  return out;
}

BlockList apply_noise(const BlockList& y, const NoiseSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case NoiseKind::none: return y;
    case NoiseKind::gaussian: return add_gaussian(y, spec.epsilon, spec.seed);
    case NoiseKind::salt_pepper: return add_salt_pepper(y, spec.kappa, spec.seed);
    case NoiseKind::impulsive: return add_impulsive(y, spec.kappa, spec.epsilon, spec.seed);
  }
  return y;
}

NoiseLevel noise_level(const BlockList& y_exact, const BlockList& y_noisy, double r_Y) {
  if (y_exact.size() != y_noisy.size()) throw InputError("noise_level: block count mismatch");
  NoiseLevel level;
  level.per_block.reserve(y_exact.size());
  for (std::size_t i = 0; i < y_exact.size(); ++i) {
    const double d = lr_norm(y_exact[i] - y_noisy[i], r_Y);
    level.per_block.push_back(d);
    level.max = std::max(level.max, d);
  }
  return level;
}

}  // namespace bsgd
