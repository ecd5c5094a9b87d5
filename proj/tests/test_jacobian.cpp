#include <gtest/gtest.h>

#include "support.hpp"

using namespace ispinv;
using testing_support::identity_params;
using testing_support::random_params;
using testing_support::to_oracle;

TEST(Jacobian, SaturatedPixelIsZero) {
  const IspParams p = identity_params();
  const auto j = jacobian_at({1.5, 2.0, 3.0}, p);
  EXPECT_EQ(j.j, Mat3::zero());
}

TEST(Jacobian, GrayIdentityClosedForm) {
  const IspParams p = identity_params();
  const double a = 1.0 / 2.2, v = 0.2, g = std::pow(v, a);
  const double expected = 6 * g * (1 - g) * a * std::pow(v, a - 1);
  const Mat3 j = jacobian_at({0.2, 0.2, 0.2}, p).j;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(j(r, c), r == c ? expected : 0.0, 1e-14);
}

TEST(Jacobian, MatchesEntrywiseOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const IspParams p = random_params(seed);
    const auto o = to_oracle(p);
    Rng rng(seed + 100);
    for (int k = 0; k < 500; ++k) {
      const Vec3 l{rng.uniform(-0.1, 1.1), rng.uniform(-0.1, 1.1), rng.uniform(-0.1, 1.1)};
      const Mat3 j = jacobian_at(l, p).j;
      const auto ref = oracle::jacobian({l[0], l[1], l[2]}, o);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(j(r, c), ref[r][c], 1e-13 * (1 + std::fabs(ref[r][c])));
    }
  }
}

TEST(Jacobian, FiniteDifferencesAwayFromBoundaries) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const IspParams p = random_params(seed);
    const auto o = to_oracle(p);
    Rng rng(seed + 200);
    int tested = 0;
    while (tested < 400) {
      const Vec3 l{rng.uniform(), rng.uniform(), rng.uniform()};
      if (boundary_distance(l, p) <= 1e-3) continue;
      ++tested;
      const Mat3 j = jacobian_at(l, p).j;
      const auto fd = oracle::central_difference({l[0], l[1], l[2]}, o);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) EXPECT_LE(std::fabs(j(r, c) - fd[r][c]), std::fmax(1e-5 * std::fabs(fd[r][c]), 1e-8));
    }
  }
}

TEST(Jacobian, ZeroRowAndColumnStructure) {
  Rng rng(300);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const IspParams p = random_params(seed);
    for (int k = 0; k < 2000; ++k) {
      const Vec3 l{rng.uniform(-0.2, 1.0), rng.uniform(-0.2, 1.0), rng.uniform(-0.2, 1.0)};
      const auto pj = jacobian_at(l, p);
      for (std::size_t c = 0; c < 3; ++c) {
        for (double x : pj.mask_s) EXPECT_TRUE(x == 0.0 || x == 1.0);
        if (pj.mask_s[c] == 0.0 || pj.mask_gamma[c] == 0.0)
          for (std::size_t k2 = 0; k2 < 3; ++k2) EXPECT_EQ(pj.j(c, k2), 0.0);
        if (pj.mask_w[c] == 0.0)
          for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(pj.j(r, c), 0.0);
      }
    }
  }
}

TEST(Jacobian, InclusiveMaskAtExactBoundary) {
  IspParams p = identity_params();
  p.wb_gains = {2.0, 1.0, 1.0};
  const auto pj = jacobian_at({0.5, 0.3, 0.3}, p);  // u_pre_R == 1 exactly
  EXPECT_EQ(pj.mask_w[0], 1.0);
  EXPECT_EQ(jacobian_at({0.0, 0.3, 0.3}, p).mask_w[0], 1.0);  // u_pre_R == 0
}

TEST(Jacobian, ToneDerivativePositiveBelowOne) {
  const IspParams p = random_params(1);
  Rng rng(400);
  for (int k = 0; k < 5000; ++k) {
    const Vec3 l{rng.uniform(), rng.uniform(), rng.uniform()};
    const IspTrace t = trace_pixel(l, p);
    for (int c = 0; c < 3; ++c)
      if (t.v[c] < 1.0) EXPECT_GT(6 * t.g[c] * (1 - t.g[c]), 0.0);
  }
}

TEST(Jacobian, ImageFieldEqualsPerPixelCalls) {
  const IspParams p = random_params(2);
  Rng rng(500);
  LinearImage img(16, 16);
  for (auto& x : img.values()) x = rng.uniform();
  const auto field = jacobian_image(img, p, 4);
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(field.at(r, c).j, jacobian_at(img.pixel(r, c), p).j);

  LinearImage one(1, 1, 0.4);
  EXPECT_EQ(jacobian_image(one, p).at(0, 0).j, jacobian_at({0.4, 0.4, 0.4}, p).j);
  LinearImage white(3, 3, 5.0);
  for (const auto& pj : jacobian_image(white, p).pixels) EXPECT_EQ(pj.j, Mat3::zero());
}

TEST(Jacobian, SingularValuesOnDemand) {
  auto pj = jacobian_at({0.2, 0.3, 0.4}, random_params(3));
  EXPECT_FALSE(pj.singular_values.has_value());
  const Vec3 s = pj.compute_singular_values();
  EXPECT_TRUE(pj.singular_values.has_value());
  EXPECT_GE(s[0], s[1]);
  EXPECT_GE(s[1], s[2]);
}

TEST(Jacobian, RejectsNonFinite) {
  EXPECT_THROW(jacobian_at({std::nan(""), 0.0, 0.0}, identity_params()), NumericalError);
}
