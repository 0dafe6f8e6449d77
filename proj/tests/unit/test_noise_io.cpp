#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "bsgd/array_io.hpp"
#include "bsgd/geometry.hpp"
#include "bsgd/noise.hpp"
#include "test_support.hpp"

namespace bsgd {
namespace {

BlockList ramp_blocks(std::size_t n_blocks, std::size_t block_size) {
  BlockList out;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    std::vector<double> v(block_size);
    for (std::size_t j = 0; j < block_size; ++j)
      v[j] = std::sin(0.37 * static_cast<double>(b * block_size + j)) + 0.1 * static_cast<double>(b);
    out.emplace_back(std::move(v));
  }
  return out;
}

double stacked_sup(const BlockList& y) {
  double m = 0.0;
  for (const auto& b : y) m = std::max(m, testing::max_abs(b.values()));
  return m;
}

TEST(RngTest, DeterministicAndStreamSeparated) {
  CounterRng a(42, 1);
  CounterRng b(42, 1);
  CounterRng c(42, 2);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs |= x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(RngTest, UniformAndNormalMoments) {
  CounterRng rng(7);
  double s = 0.0;
  double s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
  }
  EXPECT_NEAR(s / n, 0.5, 0.005);
  s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(RngTest, IndexInRangeAndRoughlyUniform) {
  CounterRng rng(9);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto k = rng.index(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(GaussianNoiseTest, ZeroEpsilonIsIdentity) {
  const BlockList y = ramp_blocks(3, 5);
  EXPECT_EQ(add_gaussian(y, 0.0, 1), y);
}

TEST(GaussianNoiseTest, UnitStandardDeviationAfterScaling) {
  const BlockList y = ramp_blocks(100, 1000);
  const double eps = 5e-2;
  const BlockList yd = add_gaussian(y, eps, 3);
  const double scale = eps * stacked_sup(y);
  double s2 = 0.0;
  std::size_t n = 0;
  for (std::size_t b = 0; b < y.size(); ++b)
    for (std::size_t j = 0; j < y[b].size(); ++j) {
      const double z = (yd[b][j] - y[b][j]) / scale;
      s2 += z * z;
      ++n;
    }
  const double sd = std::sqrt(s2 / static_cast<double>(n));
  EXPECT_GE(sd, 0.99);
  EXPECT_LE(sd, 1.01);
}

TEST(GaussianNoiseTest, LinearInEpsilon) {
  const BlockList y = ramp_blocks(4, 8);
  const BlockList a = add_gaussian(y, 0.01, 5);
  const BlockList b = add_gaussian(y, 0.02, 5);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y[i].size(); ++j)
      EXPECT_NEAR(b[i][j] - y[i][j], 2.0 * (a[i][j] - y[i][j]), 1e-15);
  const double da = noise_level(y, a, 2.0).max;
  const double db = noise_level(y, b, 2.0).max;
  EXPECT_NEAR(db, 2.0 * da, 1e-14);
  EXPECT_EQ(add_gaussian(y, 0.01, 5), a);
}

TEST(SaltPepperTest, CorruptedFractionNearKappa) {
  const BlockList y = ramp_blocks(100, 1000);
  const double hi = [&] {
    double m = -INFINITY;
    for (const auto& b : y) for (double v : b.values()) m = std::max(m, v);
    return m;
  }();
  const double lo = [&] {
    double m = INFINITY;
    for (const auto& b : y) for (double v : b.values()) m = std::min(m, v);
    return m;
  }();
  const BlockList yd = add_salt_pepper(y, 0.1, 11);
  std::size_t changed = 0;
  std::size_t total = 0;
  for (std::size_t b = 0; b < y.size(); ++b)
    for (std::size_t j = 0; j < y[b].size(); ++j) {
      ++total;
      if (yd[b][j] != y[b][j]) {
        ++changed;
        EXPECT_TRUE(yd[b][j] == hi || yd[b][j] == lo);
      }
    }
  const double frac = static_cast<double>(changed) / static_cast<double>(total);
  EXPECT_GE(frac, 0.09);
  EXPECT_LE(frac, 0.11);
  EXPECT_EQ(add_salt_pepper(y, 0.1, 11), yd);
}

TEST(SaltPepperTest, ConstantDataTakesTwoValues) {
  BlockList y;
  y.emplace_back(std::vector<double>(500, 2.0));
  y[0] = GridVector([] {
    std::vector<double> v(500, 2.0);
    v[0] = -1.0;
    v[1] = 5.0;
    return v;
  }());
  const BlockList yd = add_salt_pepper(y, 0.3, 2);
  std::set<double> corrupted;
  for (std::size_t j = 0; j < 500; ++j)
    if (yd[0][j] != y[0][j]) corrupted.insert(yd[0][j]);
  EXPECT_LE(corrupted.size(), 2u);
  for (double v : corrupted) EXPECT_TRUE(v == -1.0 || v == 5.0);
}

TEST(ImpulsiveNoiseTest, EpsilonZeroIdentityAndBlockFraction) {
  const BlockList y = ramp_blocks(2000, 3);
  EXPECT_EQ(add_impulsive(y, 0.1, 0.0, 4), y);
  const BlockList yd = add_impulsive(y, 0.1, 0.4, 4);
  std::size_t corrupted = 0;
  for (std::size_t b = 0; b < y.size(); ++b) {
    bool any = false;
    for (std::size_t j = 0; j < 3; ++j) any |= yd[b][j] != y[b][j];
    corrupted += any;
  }
  EXPECT_NEAR(static_cast<double>(corrupted) / 2000.0, 0.1, 0.02);
}

TEST(NoiseSpecTest, Validation) {
  NoiseSpec s;
  s.kind = NoiseKind::salt_pepper;
  s.kappa = 0.0;
  EXPECT_THROW(s.validate(), InputError);
  s.kappa = 1.0;
  EXPECT_THROW(s.validate(), InputError);
  s.kappa = 0.1;
  EXPECT_NO_THROW(s.validate());
  s.kind = NoiseKind::gaussian;
  s.epsilon = -1.0;
  EXPECT_THROW(s.validate(), InputError);
  EXPECT_EQ(parse_noise_kind("impulsive"), NoiseKind::impulsive);
  EXPECT_THROW(parse_noise_kind("poisson"), InputError);
}

TEST(NoiseLevelTest, Examples) {
  const BlockList y = ramp_blocks(3, 4);
  const NoiseLevel zero = noise_level(y, y, 2.0);
  EXPECT_EQ(zero.max, 0.0);
  for (double d : zero.per_block) EXPECT_EQ(d, 0.0);

  const BlockList a = {GridVector({1.0, 1.0})};
  const BlockList b = {GridVector({4.0, 5.0})};
  EXPECT_DOUBLE_EQ(noise_level(a, b, 2.0).max, 5.0);
  EXPECT_THROW(noise_level(a, y, 2.0), InputError);
}

TEST(NoiseLevelTest, MatchesIndependentSummation) {
  CounterRng rng(12);
  BlockList y;
  for (int b = 0; b < 6; ++b) y.push_back(testing::random_vector(rng, 10));
  const BlockList yd = add_gaussian(y, 0.1, 8);
  const NoiseLevel lvl = noise_level(y, yd, 1.5);
  double worst = 0.0;
  for (std::size_t b = 0; b < y.size(); ++b) {
    long double s = 0.0L;
    for (std::size_t j = 0; j < y[b].size(); ++j)
      s += std::pow(std::abs(static_cast<long double>(yd[b][j]) - y[b][j]), 1.5L);
    const double ref = static_cast<double>(std::pow(s, 1.0L / 1.5L));
    EXPECT_LE(testing::rel_diff(lvl.per_block[b], ref), 1e-12);
    worst = std::max(worst, ref);
  }
  EXPECT_LE(testing::rel_diff(lvl.max, worst), 1e-12);
}

TEST(ArrayIoTest, RoundTripStreamAndFile) {
  CounterRng rng(13);
  const GridVector v = testing::random_shaped(rng, {3, 4, 2}, 10.0);
  std::stringstream ss;
  write_array(ss, v);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 13), "BSGD 3 3 4 2\n");
  EXPECT_EQ(bytes.size(), 13 + 24 * sizeof(double));
  EXPECT_EQ(read_array(ss), v);

  const auto path = std::filesystem::temp_directory_path() / "bsgd_array_io_test.bsgd";
  write_array(path, v);
  EXPECT_EQ(read_array(path), v);
  std::filesystem::remove(path);
}

TEST(ArrayIoTest, LittleEndianPayload) {
  std::stringstream ss;
  write_array(ss, GridVector({1.0}));
  const std::string bytes = ss.str();
  // 1.0 = 0x3FF0000000000000, least significant byte first.
  const std::string payload = bytes.substr(bytes.size() - 8);
  EXPECT_EQ(static_cast<unsigned char>(payload[7]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(payload[6]), 0xF0);
  EXPECT_EQ(static_cast<unsigned char>(payload[0]), 0x00);
}

TEST(ArrayIoTest, RejectsMalformedInput) {
  for (const std::string text : {"XSGD 1 1\n12345678", "BSGD 1 2\n12345678", "BSGD 1 1\n1234567890",
                                 "BSGD x\n", ""}) {
    std::stringstream ss(text);
    EXPECT_THROW(read_array(ss), InputError) << text;
  }
  EXPECT_THROW(read_array(std::filesystem::path("/nonexistent/file.bsgd")), InputError);
}

}  // namespace
}  // namespace bsgd
