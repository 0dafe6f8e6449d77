#pragma once

#include <cstdint>
#include <limits>

namespace bsgd {

/// Counter-based SplitMix64 stream.
///
/// The i-th output of stream (seed, stream_id) is mix64(key + i * 0x9E3779B97F4A7C15)
/// with key = mix64(seed ^ mix64(stream_id + 0xD1B54A32D192ED03)), and mix64 the
/// SplitMix64 finaliser. All derived variates use fixed, portable transforms:
///   uniform()  = ((u >> 11) + 0.5) * 2^-53, in the open interval (0, 1)
///   normal()   = Box-Muller on two consecutive uniforms (cosine branch, then sine)
///   index(n)   = high 64 bits of u * n
/// so a (seed, stream) pair reproduces the same numbers on every platform
/// with IEEE-754 doubles and a correctly rounded libm.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }
  result_type next();

  double uniform();
  double normal();
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t index(std::uint64_t n);

  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix64(std::uint64_t z);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bsgd
