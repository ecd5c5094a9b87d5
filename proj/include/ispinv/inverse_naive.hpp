#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "ispinv/error.hpp"
#include "ispinv/image.hpp"
#include "ispinv/isp_forward.hpp"
#include "ispinv/linalg.hpp"
#include "ispinv/parallel.hpp"

namespace ispinv {

// Baseline that undoes each ISP step in reverse order, as if the pipeline
// were a bijection. Clipped information is simply lost.

/// Root of 3g^2 - 2g^3 = s on [0, 1]: g = 1/2 - sin(asin(1 - 2s) / 3).
inline double inverse_tone_curve(double s) {
  if (!(s > 0.0)) return 0.0;
  if (s >= 1.0) return 1.0;
  const double x = std::clamp(1.0 - 2.0 * s, -1.0, 1.0);
  return std::clamp(0.5 - std::sin(std::asin(x) / 3.0), 0.0, 1.0);
}

inline Vec3 inverse_tone_map(const Vec3& s) {
  return {inverse_tone_curve(s[0]), inverse_tone_curve(s[1]), inverse_tone_curve(s[2])};
}

inline Vec3 inverse_gamma(const Vec3& g, const IspParams& p) {
  return {std::pow(std::fmax(g[0], 0.0), p.gamma), std::pow(std::fmax(g[1], 0.0), p.gamma),
          std::pow(std::fmax(g[2], 0.0), p.gamma)};
}

/// CCMs whose 1-norm condition number exceeds this are rejected.
inline constexpr double kMaxCcmCondition = 1e12;

/// Precomputed inverse of a color correction matrix.
class CcmInverse {
 public:
  explicit CcmInverse(const Mat3& ccm) : condition_(condition_number(ccm)) {
    if (!(condition_ <= kMaxCcmCondition))
      throw NumericalError("color correction matrix is singular or ill-conditioned (cond = " +
                           std::to_string(condition_) + ")");
    lu_.emplace(ccm);
  }

  double condition() const { return condition_; }
  Vec3 apply(const Vec3& v) const { return lu_->solve(v); }

 private:
  double condition_;
  std::optional<Lu3> lu_;
};

inline Vec3 inverse_color_correct(const Vec3& v, const IspParams& p) { return CcmInverse(p.ccm).apply(v); }

inline void require_invertible_gains(const IspParams& p) {
  for (double w : p.wb_gains)
    if (!(w != 0.0) || !std::isfinite(w)) throw NumericalError("white-balance gain is zero or non-finite");
}

inline Vec3 inverse_white_balance(const Vec3& u, const IspParams& p) {
  require_invertible_gains(p);
  return {u[0] / p.wb_gains[0], u[1] / p.wb_gains[1], u[2] / p.wb_gains[2]};
}

/// Applies the four inverse steps to every pixel, clamping the result to [0, 1].
inline LinearImage naive_invert_image(const SrgbImage& s_d, const IspParams& p, unsigned threads = 0) {
  require_invertible_gains(p);
  const CcmInverse ccm_inv(p.ccm);
  LinearImage out(s_d.height(), s_d.width());
  parallel_rows(s_d.height(), threads, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = 0; c < s_d.width(); ++c) {
        const Vec3 s = s_d.pixel(r, c);
        if (!all_finite(s)) throw PixelError("non-finite sRGB input", r, c);
        const Vec3 u = ccm_inv.apply(inverse_gamma(inverse_tone_map(s), p));
        const Vec3 l{u[0] / p.wb_gains[0], u[1] / p.wb_gains[1], u[2] / p.wb_gains[2]};
        out.set_pixel(r, c, clip01(l));
      }
  });
  return out;
}

}  // namespace ispinv
