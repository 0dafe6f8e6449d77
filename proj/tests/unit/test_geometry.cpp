#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bsgd/geometry.hpp"
#include "test_support.hpp"

namespace bsgd {
namespace {

using testing::random_vector;
using testing::rel_diff;

// Extended-precision references (40 significant digits, then rounded).
constexpr double kNorm_1m23_r15 = 4.334622872113609681484224761172755672091;
constexpr double kBregman_e1e2_r15_p2 = 1.0;
constexpr double kBregman_zw_r15_p2 = 6.100910962170916075389478001800026387965;
constexpr double kBregman_zw_r3_p3 = 10.35966666666666666666666666666666666667;
constexpr double kBregman_zw_r11_p11 = 2.467961739905660537679268137236273937683;

const GridVector kZ({0.3, -1.2, 2.0});
const GridVector kW({1.1, 0.4, -0.7});

struct Exponents {
  double r;
  double p;
};

std::vector<Exponents> exponent_grid() {
  std::vector<Exponents> out;
  for (double r : {1.1, 1.5, 2.0, 3.0}) {
    out.push_back({r, 2.0});
    if (r != 2.0) out.push_back({r, r});
  }
  return out;
}

TEST(GridVectorTest, RejectsShapeMismatchAndNonFinite) {
  EXPECT_THROW(GridVector({1.0, 2.0}, {3}), InputError);
  EXPECT_THROW(GridVector({1.0, NAN}), InputError);
  EXPECT_THROW(GridVector({INFINITY}), InputError);
  EXPECT_NO_THROW(GridVector({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}, {2, 3}));
}

TEST(GeometryParamsTest, ConjugatesAndValidation) {
  const auto g = GeometryParams::make(1.5, 2.0);
  EXPECT_DOUBLE_EQ(g.r_star(), 3.0);
  EXPECT_DOUBLE_EQ(g.p_star(), 2.0);
  EXPECT_THROW(GeometryParams::make(1.0, 2.0), InputError);
  EXPECT_THROW(GeometryParams::make(2.0, 0.5), InputError);
  EXPECT_THROW(GeometryParams(1.5, 2.0, 2.9, 2.0), InputError);
  EXPECT_TRUE(GeometryParams::make(2.0, 2.0).is_hilbert());
  EXPECT_TRUE(GeometryParams::make(1.5, 1.5).is_practice_mode());
  EXPECT_FALSE(GeometryParams::make(1.5, 2.0).is_practice_mode());
  EXPECT_FALSE(GeometryParams::make(3.0, 3.0).is_practice_mode());
}

TEST(LrNormTest, ReferenceValues) {
  EXPECT_EQ(lr_norm(GridVector::zeros({4, 3}), 1.5), 0.0);
  EXPECT_DOUBLE_EQ(lr_norm(GridVector({3.0, 4.0}), 2.0), 5.0);
  EXPECT_LE(rel_diff(lr_norm(GridVector({1.0, -2.0, 3.0}), 1.5), kNorm_1m23_r15), 1e-15);
  EXPECT_DOUBLE_EQ(lr_norm(GridVector({1.0, -7.0, 3.0}), kInfinity), 7.0);
}

TEST(LrNormTest, NoOverflowForLargeEntries) {
  const GridVector v({1e200, 1e200});
  EXPECT_LE(rel_diff(lr_norm(v, 3.0), 1e200 * std::cbrt(2.0)), 1e-14);
}

TEST(LrNormTest, RejectsNonFiniteAndBadExponent) {
  const std::vector<double> bad = {1.0, NAN};
  EXPECT_THROW(lr_norm(bad, 2.0), InputError);
  EXPECT_THROW(lr_norm(GridVector({1.0}), 1.0), InputError);
}

TEST(DualityMapTest, HilbertIdentityAndZero) {
  const auto g = GeometryParams::make(2.0, 2.0);
  const GridVector v({0.5, -1.2});
  const DualVector j = duality_map(v, g);
  EXPECT_EQ(j[0], 0.5);
  EXPECT_EQ(j[1], -1.2);
  for (const auto& e : exponent_grid()) {
    const auto ge = GeometryParams::make(e.r, e.p);
    EXPECT_EQ(duality_map(GridVector::zeros({3}), ge), DualVector::zeros({3}));
    EXPECT_EQ(inverse_duality_map(DualVector::zeros({3}), ge), GridVector::zeros({3}));
  }
}

TEST(DualityMapTest, ZeroForPBelowR) {
  // The norm power ||v||^{p-r} is singular at 0 when p < r; the map still returns 0.
  const auto g = GeometryParams::make(3.0, 1.5);
  EXPECT_EQ(duality_map(GridVector::zeros({2}), g), DualVector::zeros({2}));
}

TEST(DualityMapTest, ReferenceComponents) {
  const DualVector j = duality_map(kZ, GeometryParams::make(1.5, 2.0));
  const double expected[] = {0.8911721296359325673, -1.782344259271865135, 2.300996544456109349};
  for (int i = 0; i < 3; ++i) EXPECT_LE(rel_diff(j[i], expected[i]), 1e-14);
}

TEST(DualityMapTest, PairingIdentityRandom) {
  CounterRng rng(1);
  for (const auto& e : exponent_grid()) {
    const auto g = GeometryParams::make(e.r, e.p);
    for (int t = 0; t < 200; ++t) {
      const GridVector v = random_vector(rng, 7);
      const DualVector j = duality_map(v, g);
      const double n = lr_norm(v, e.r);
      EXPECT_LE(rel_diff(pairing(j, v), std::pow(n, e.p)), 1e-10);
      EXPECT_LE(rel_diff(lr_norm(j, g.r_star()), std::pow(n, e.p - 1.0)), 1e-10);
    }
  }
}

TEST(DualityMapTest, PairingIdentitySpecExample) {
  const auto g = GeometryParams::make(1.5, 2.0);
  const GridVector v({1.0, -2.0});
  const double n = lr_norm(v, 1.5);
  EXPECT_LE(rel_diff(pairing(duality_map(v, g), v), n * n), 1e-12);
}

TEST(DualityMapTest, InverseComposition) {
  CounterRng rng(2);
  for (const auto& e : exponent_grid()) {
    const auto g = GeometryParams::make(e.r, e.p);
    for (int t = 0; t < 200; ++t) {
      const GridVector v = random_vector(rng, 9, 3.0);
      const GridVector back = inverse_duality_map(duality_map(v, g), g);
      const double scale = lr_norm(v, 2.0);
      for (std::size_t i = 0; i < v.size(); ++i) EXPECT_LE(std::abs(back[i] - v[i]), 1e-10 * scale);
    }
  }
}

TEST(DualityMapTest, Monotone) {
  CounterRng rng(3);
  for (const auto& e : exponent_grid()) {
    const auto g = GeometryParams::make(e.r, e.p);
    for (int t = 0; t < 200; ++t) {
      const GridVector x = random_vector(rng, 5);
      const GridVector y = random_vector(rng, 5);
      EXPECT_GE(pairing(duality_map(x, g) - duality_map(y, g), x - y), -1e-12);
    }
  }
}

TEST(BregmanTest, ReferenceValues) {
  EXPECT_EQ(bregman_distance(GridVector({1.0, 2.0, 3.0}), GridVector({1.0, 2.0, 3.0}),
                             GeometryParams::make(1.5, 2.0)),
            0.0);
  EXPECT_LE(rel_diff(bregman_distance(GridVector({1.0, 0.0}), GridVector({0.0, 1.0}),
                                      GeometryParams::make(1.5, 2.0)),
                     kBregman_e1e2_r15_p2),
            1e-14);
  EXPECT_LE(rel_diff(bregman_distance(kZ, kW, GeometryParams::make(1.5, 2.0)), kBregman_zw_r15_p2), 1e-13);
  EXPECT_LE(rel_diff(bregman_distance(kZ, kW, GeometryParams::make(3.0, 3.0)), kBregman_zw_r3_p3), 1e-13);
  EXPECT_LE(rel_diff(bregman_distance(kZ, kW, GeometryParams::make(1.1, 1.1)), kBregman_zw_r11_p11), 1e-12);
}

TEST(BregmanTest, HilbertHalfSquaredDistance) {
  CounterRng rng(4);
  const auto g = GeometryParams::make(2.0, 2.0);
  for (int t = 0; t < 200; ++t) {
    const GridVector z = random_vector(rng, 6);
    const GridVector w = random_vector(rng, 6);
    const double d = lr_norm(z - w, 2.0);
    EXPECT_NEAR(bregman_distance(z, w, g), 0.5 * d * d, 1e-12);
  }
}

TEST(BregmanTest, ShapeMismatchThrows) {
  EXPECT_THROW(bregman_distance(GridVector({1.0, 2.0}), GridVector({1.0, 2.0, 3.0}),
                                GeometryParams::make(2.0, 2.0)),
               InputError);
}

TEST(BregmanTest, ThreePointIdentity) {
  CounterRng rng(5);
  for (const auto& e : exponent_grid()) {
    const auto g = GeometryParams::make(e.r, e.p);
    for (int t = 0; t < 200; ++t) {
      const GridVector z = random_vector(rng, 5);
      const GridVector w = random_vector(rng, 5);
      const GridVector v = random_vector(rng, 5);
      const double lhs = bregman_distance(z, w, g);
      const double rhs = bregman_distance(z, v, g) + bregman_distance(v, w, g) +
                         pairing(duality_map(v, g) - duality_map(z, g), w - v);
      EXPECT_NEAR(lhs, rhs, 1e-10);
    }
  }
}

TEST(BregmanTest, NonnegativeAndDefinite) {
  CounterRng rng(6);
  for (const auto& e : exponent_grid()) {
    const auto g = GeometryParams::make(e.r, e.p);
    for (int t = 0; t < 200; ++t) {
      const GridVector z = random_vector(rng, 5);
      // Perturbations from unit scale down to 1e-9.
      const double eps = std::pow(10.0, -9.0 * rng.uniform());
      const GridVector w = z + eps * random_vector(rng, 5);
      const double d = bregman_distance(z, w, g);
      EXPECT_GE(d, -1e-12);
      if (d < 1e-12) {
        EXPECT_LT(lr_norm(z - w, e.r), 1e-5) << "r=" << e.r << " p=" << e.p;
      }
    }
  }
}

TEST(BregmanTest, ConvexityLowerBoundCalibrated) {
  CounterRng rng(7);
  for (const auto& e : exponent_grid()) {
    const auto g = GeometryParams::make(e.r, e.p);
    const double s = std::max(e.r, 2.0);
    auto ratio = [&](const GridVector& z, const GridVector& w) {
      return bregman_distance(z, w, g) / std::pow(lr_norm(w - z, e.r), s);
    };
    double c = INFINITY;
    for (int t = 0; t < 500; ++t) c = std::min(c, ratio(random_vector(rng, 4), random_vector(rng, 4)));
    c *= 0.5;  // safety factor for the fresh sample
    ASSERT_GT(c, 0.0);
    for (int t = 0; t < 500; ++t) {
      const GridVector z = random_vector(rng, 4);
      const GridVector w = random_vector(rng, 4);
      EXPECT_GE(bregman_distance(z, w, g), c * std::pow(lr_norm(w - z, e.r), s));
    }
  }
}

TEST(BregmanTest, Coercivity) {
  CounterRng rng(8);
  for (const auto& e : exponent_grid()) {
    const auto g = GeometryParams::make(e.r, e.p);
    const double p_star = g.p_star();
    for (int t = 0; t < 200; ++t) {
      const GridVector truth = random_vector(rng, 5);
      const GridVector x = random_vector(rng, 5, 4.0);
      const double C = bregman_distance(x, truth, g);
      const double lhs = std::pow(lr_norm(x, e.r), e.p);
      const double rhs = std::pow(2.0 * p_star, e.p) * std::max(std::pow(lr_norm(truth, e.r), e.p), C);
      EXPECT_LE(lhs, rhs * (1.0 + 1e-9));
    }
  }
}

TEST(ProductNormTest, Basics) {
  EXPECT_THROW(product_norm(std::vector<GridVector>{}, 2.0, 2.0), InputError);
  const GridVector a({1.0, -2.0, 3.0});
  EXPECT_DOUBLE_EQ(product_norm(std::vector<GridVector>{a}, 1.5, 2.0), lr_norm(a, 1.5));
  const std::vector<GridVector> blocks = {GridVector({3.0}), GridVector({0.0, 4.0})};
  EXPECT_DOUBLE_EQ(product_norm(blocks, 2.0, 2.0), 5.0);
}

TEST(ProductNormTest, NormEquivalenceConstant) {
  CounterRng rng(9);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.index(8);
    std::vector<GridVector> blocks;
    for (std::size_t i = 0; i < n; ++i) blocks.push_back(random_vector(rng, 3));
    for (auto [r, q] : {std::pair{1.5, 2.0}, std::pair{2.0, 3.0}, std::pair{1.1, 4.0}}) {
      const double lhs = std::pow(product_norm(blocks, 2.0, r), q);
      const double rhs = std::pow(static_cast<double>(n), q / r - 1.0) * std::pow(product_norm(blocks, 2.0, q), q);
      // ||y||_{l^r}^q versus N^{q/r-1} ||y||_{l^q}^q for q > r: the l^q norm is the smaller one.
      EXPECT_LE(std::pow(product_norm(blocks, 2.0, q), q), lhs * (1.0 + 1e-12));
      EXPECT_LE(lhs, rhs * (1.0 + 1e-12));
    }
  }
}

}  // namespace
}  // namespace bsgd
