#include <gtest/gtest.h>

#include "support.hpp"

using namespace ispinv;
using testing_support::identity_params;
using testing_support::random_params;
using testing_support::to_oracle;

TEST(WhiteBalance, IdentityGains) {
  const auto wb = white_balance({0.3, 0.3, 0.3}, identity_params());
  EXPECT_EQ(wb.u, (Vec3{0.3, 0.3, 0.3}));
}

TEST(WhiteBalance, ClipsAtOneAndKeepsPreClip) {
  IspParams p = identity_params();
  p.wb_gains = {2.0, 1.0, 1.5};
  const auto wb = white_balance({0.6, 0.2, 0.8}, p);
  EXPECT_DOUBLE_EQ(wb.u_pre[0], 1.2);
  EXPECT_DOUBLE_EQ(wb.u_pre[1], 0.2);
  EXPECT_DOUBLE_EQ(wb.u_pre[2], 1.2);
  EXPECT_EQ(wb.u, (Vec3{1.0, 0.2, 1.0}));
}

TEST(WhiteBalance, DirectEvaluation) {
  IspParams p = identity_params();
  p.wb_gains = {2.2, 1.0, 1.7};
  const auto wb = white_balance({0.1, 0.1, 0.1}, p);
  EXPECT_NEAR(wb.u[0], 0.22, 1e-15);
  EXPECT_NEAR(wb.u[1], 0.1, 1e-15);
  EXPECT_NEAR(wb.u[2], 0.17, 1e-15);
}

TEST(ColorCorrect, IdentityAndNegativeIntermediate) {
  EXPECT_EQ(color_correct({0.4, 0.5, 0.6}, identity_params()), (Vec3{0.4, 0.5, 0.6}));
  IspParams p = identity_params();
  p.ccm.rows[0] = {1.5, -0.3, -0.2};
  EXPECT_DOUBLE_EQ(color_correct({0.0, 1.0, 0.0}, p)[0], -0.3);
}

TEST(ColorCorrect, RowSumOnePreservesGray) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const IspParams p = random_params(seed);
    const Vec3 v = color_correct({0.37, 0.37, 0.37}, p);
    for (double x : v) EXPECT_NEAR(x, 0.37, 1e-12);
  }
}

TEST(GammaCompress, Cases) {
  const IspParams p = identity_params();
  EXPECT_EQ(gamma_compress({1.0, 1.0, 1.0}, p), (Vec3{1.0, 1.0, 1.0}));
  const Vec3 g = gamma_compress({-0.2, 0.0, 0.5}, p);
  const double floor = std::pow(1e-8, 1.0 / 2.2);
  EXPECT_EQ(g[0], floor);
  EXPECT_EQ(g[1], floor);
  EXPECT_NEAR(floor, 2.3e-4, 0.05e-4);
  EXPECT_NEAR(g[2], std::exp(std::log(0.5) / 2.2), 1e-15);
  EXPECT_NEAR(gamma_compress({std::pow(0.5, 2.2), 0.5, 0.5}, p)[0], 0.5, 1e-15);
}

TEST(GammaCompress, NeverNaN) {
  const IspParams p = identity_params();
  for (double v : {-1e300, -1.0, -1e-300, 0.0, 1e-300, 1e300})
    for (double x : gamma_compress({v, v, v}, p)) EXPECT_TRUE(std::isfinite(x));
}

TEST(ToneMap, Cases) {
  EXPECT_EQ(tone_map({0.0, 1.0, 0.5}).s, (Vec3{0.0, 1.0, 0.5}));
  EXPECT_DOUBLE_EQ(tone_map({0.25, 0.25, 0.25}).s_pre[0], 0.15625);
}

TEST(ForwardIsp, FixedPointAndEpsilonFloor) {
  const IspParams p = identity_params();
  EXPECT_EQ(forward_pixel({1.0, 1.0, 1.0}, p), (Vec3{1.0, 1.0, 1.0}));
  const double g = std::pow(1e-8, 1.0 / 2.2);
  const double s = 3 * g * g - 2 * g * g * g;
  const Vec3 out = forward_pixel({0.0, 0.0, 0.0}, p);
  for (double x : out) {
    EXPECT_DOUBLE_EQ(x, s);
    EXPECT_GT(x, 1e-7);
    EXPECT_LT(x, 2e-7);
  }
}

TEST(ForwardIsp, MatchesScalarOracleBitForBit) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const IspParams p = random_params(seed);
    const auto o = to_oracle(p);
    Rng rng(seed);
    LinearImage img(4, 4);
    for (auto& x : img.values()) x = rng.uniform(-0.2, 1.2);
    const SrgbImage out = forward_isp(img, p, 1);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      const Vec3 l = img.pixel(i);
      const auto ref = oracle::forward({l[0], l[1], l[2]}, o);
      for (int c = 0; c < 3; ++c) EXPECT_EQ(out.pixel(i)[c], ref[c]);
    }
  }
}

TEST(ForwardIsp, TotalOnWideInputs) {
  const IspParams p = random_params(3);
  Rng rng(3);
  for (int k = 0; k < 20000; ++k) {
    const Vec3 l{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)};
    for (double x : forward_pixel(l, p)) {
      EXPECT_TRUE(std::isfinite(x));
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
  }
}

TEST(ForwardIsp, MonotoneWithIdentityCcm) {
  IspParams p = identity_params();
  p.wb_gains = {1.8, 1.0, 1.4};
  Rng rng(4);
  for (int k = 0; k < 5000; ++k) {
    const Vec3 l{rng.uniform(), rng.uniform(), rng.uniform()};
    const std::size_t c = rng.index(3);
    Vec3 l2 = l;
    l2[c] += rng.uniform(0.0, 0.1);
    const Vec3 a = forward_pixel(l, p), b = forward_pixel(l2, p);
    for (int i = 0; i < 3; ++i) EXPECT_LE(a[i], b[i]);
  }
}

TEST(ForwardIsp, GrayPreservation) {
  IspParams p = random_params(5);
  p.wb_gains = {1.0, 1.0, 1.0};
  for (double x : {0.01, 0.2, 0.5, 0.9}) {
    const Vec3 s = forward_pixel({x, x, x}, p);
    EXPECT_NEAR(s[0], s[1], 1e-12);
    EXPECT_NEAR(s[1], s[2], 1e-12);
  }
}

TEST(ForwardIsp, SaturatedInputsMapToWhite) {
  const IspParams p = random_params(6);
  const Vec3 l{1.0 / p.wb_gains[0] + 0.1, 1.0 / p.wb_gains[1] + 0.1, 1.0 / p.wb_gains[2] + 0.1};
  for (double x : forward_pixel(l, p)) EXPECT_NEAR(x, 1.0, 1e-15);
}

TEST(ForwardIsp, ThreadCountDoesNotChangeBits) {
  const IspParams p = random_params(7);
  Rng rng(7);
  LinearImage img(37, 23);
  for (auto& x : img.values()) x = rng.uniform();
  const SrgbImage a = forward_isp(img, p, 1);
  for (unsigned t : {2u, 3u, 8u, 64u}) EXPECT_TRUE(a == forward_isp(img, p, t));
}

TEST(ForwardIsp, NonFiniteInputNamesPixel) {
  LinearImage img(3, 3);
  img.at(2, 1, 0) = std::nan("");
  try {
    forward_isp(img, identity_params(), 1);
    FAIL() << "expected PixelError";
  } catch (const PixelError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.col(), 1u);
  }
}

TEST(IspParams, Validation) {
  IspParams p = identity_params();
  EXPECT_NO_THROW(p.validate());
  p.wb_gains[1] = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = identity_params();
  p.ccm(0, 0) = 1.1;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.external_ccm = true;
  EXPECT_NO_THROW(p.validate());
  p.epsilon = 1.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = identity_params();
  p.gamma = -1.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
}
