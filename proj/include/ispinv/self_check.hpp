#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "ispinv/isp_forward.hpp"
#include "ispinv/isp_jacobian.hpp"
#include "ispinv/linalg.hpp"
#include "ispinv/metrics.hpp"
#include "ispinv/svd3.hpp"
#include "ispinv/synth.hpp"

namespace ispinv {

/// Central finite differences of the forward ISP, column by column.
inline Mat3 finite_difference_jacobian(const Vec3& l, const IspParams& p, double h = 1e-6) {
  Mat3 j = Mat3::zero();
  for (std::size_t c = 0; c < 3; ++c) {
    Vec3 lp = l, lm = l;
    lp[c] += h;
    lm[c] -= h;
    j.set_col(c, (1.0 / (2.0 * h)) * (forward_pixel(lp, p) - forward_pixel(lm, p)));
  }
  return j;
}

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfCheckConfig {
  std::uint64_t seed = 1;
  std::size_t jacobian_pixels = 2000;
  std::size_t remainder_pixels = 500;
  std::size_t svd_matrices = 2000;
  std::vector<Mat3> ccm_presets;
};

namespace detail {

inline std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

}  // namespace detail

/// Analytic Jacobian against central differences at random pixels at least
/// 1e-3 away from every clip boundary.
inline CheckResult check_jacobian(const SelfCheckConfig& cfg) {
  SynthConfig sc;
  sc.seed = cfg.seed;
  sc.ccm_presets = cfg.ccm_presets;
  Rng prng = Rng::stream(cfg.seed, 0), lrng = Rng::stream(cfg.seed, 1);
  const IspParams p = random_isp_params(sc, prng);
  double worst = 0.0;
  std::size_t tested = 0;
  while (tested < cfg.jacobian_pixels) {
    const Vec3 l{lrng.uniform(), lrng.uniform(), lrng.uniform()};
    if (boundary_distance(l, p) <= 1e-3) continue;
    ++tested;
    const Mat3 a = jacobian_at(l, p).j;
    const Mat3 fd = finite_difference_jacobian(l, p);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c)
        worst = std::fmax(worst, std::fabs(a(r, c) - fd(r, c)) / std::fmax(1e-5 * std::fabs(fd(r, c)), 1e-8));
  }
  return {"jacobian_finite_difference", worst <= 1.0,
          std::to_string(tested) + " pixels, worst error/tolerance " + detail::fmt(worst)};
}

/// Taylor remainder exponent over t in {1, 1/2, ..., 1/16} on interior pixels.
inline CheckResult check_remainder_scaling(const SelfCheckConfig& cfg) {
  SynthConfig sc;
  sc.seed = cfg.seed;
  sc.ccm_presets = cfg.ccm_presets;
  Rng prng = Rng::stream(cfg.seed, 2), lrng = Rng::stream(cfg.seed, 3);
  const IspParams p = random_isp_params(sc, prng);
  std::vector<Vec3> ls, dls;
  for (std::size_t i = 0; i < cfg.remainder_pixels; ++i) {
    ls.push_back(detail::sample_interior_pixel(p, lrng));
    dls.push_back({lrng.uniform(-0.02, 0.02), lrng.uniform(-0.02, 0.02), lrng.uniform(-0.02, 0.02)});
  }
  const double scales[] = {1.0, 0.5, 0.25, 0.125, 0.0625};
  try {
    const ScalingFit fit = remainder_scaling_check(ls, dls, p, scales);
    return {"remainder_scaling", fit.exponent >= 1.9 && fit.exponent <= 2.1,
            "exponent " + detail::fmt(fit.exponent) + " over " + std::to_string(fit.pixels_used) + " pixels"};
  } catch (const Error& e) {
    return {"remainder_scaling", false, e.what()};
  }
}

/// Orthogonality, reconstruction and ordering of svd3 on random full-rank,
/// rank-deficient and zero matrices.
inline CheckResult check_svd(const SelfCheckConfig& cfg) {
  Rng rng = Rng::stream(cfg.seed, 4);
  double worst_orth = 0.0, worst_rec = 0.0;
  bool ordered = true;
  for (std::size_t k = 0; k < cfg.svd_matrices; ++k) {
    Mat3 m;
    for (auto& row : m.rows)
      for (auto& x : row) x = rng.uniform(-1.0, 1.0);
    if (k % 3 == 1) m.rows[2] = m.rows[0] + m.rows[1];
    if (k % 3 == 2) m.rows[1] = m.rows[2] = 0.5 * m.rows[0];
    if (k % 97 == 0) m = Mat3::zero();
    const Svd3 s = svd3(m);
    worst_orth = std::fmax(worst_orth, max_abs(transpose(s.u) * s.u - Mat3::identity()));
    worst_orth = std::fmax(worst_orth, max_abs(transpose(s.v) * s.v - Mat3::identity()));
    worst_rec = std::fmax(worst_rec, max_abs(s.reconstruct() - m) / std::fmax(1.0, s.sigma[0]));
    ordered = ordered && s.sigma[0] >= s.sigma[1] && s.sigma[1] >= s.sigma[2] && s.sigma[2] >= 0.0;
  }
  return {"svd_contracts", worst_orth <= 1e-10 && worst_rec <= 1e-10 && ordered,
          "orthogonality " + detail::fmt(worst_orth) + ", reconstruction " + detail::fmt(worst_rec) +
              (ordered ? ", ordered" : ", ordering violated")};
}

inline std::vector<CheckResult> run_self_check(const SelfCheckConfig& cfg) {
  return {check_jacobian(cfg), check_remainder_scaling(cfg), check_svd(cfg)};
}

}  // namespace ispinv
