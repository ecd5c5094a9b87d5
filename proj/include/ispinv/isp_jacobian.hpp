#pragma once

#include <optional>
#include <vector>

#include "ispinv/image.hpp"
#include "ispinv/isp_forward.hpp"
#include "ispinv/linalg.hpp"
#include "ispinv/parallel.hpp"
#include "ispinv/svd3.hpp"

namespace ispinv {

/// Analytic derivative of the forward ISP at one pixel, together with the
/// clip masks it was assembled from.
struct PixelJacobian {
  Mat3 j;
  Vec3 mask_s{};      ///< tone-clip mask, 1 iff 0 <= s_pre <= 1
  Vec3 mask_w{};      ///< white-balance-clip mask, 1 iff 0 <= u_pre <= 1
  Vec3 mask_gamma{};  ///< gamma-clamp mask, 1 iff v >= epsilon
  std::optional<Vec3> singular_values;

  /// Fills singular_values from svd3 if not already present.
  const Vec3& compute_singular_values() {
    if (!singular_values) singular_values = svd3(j).sigma;
    return *singular_values;
  }
};

inline double inclusive_unit_mask(double x) { return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0; }

/// J = D_s * D_t * D_gamma * C * D_w * W, all diagonal factors except C.
/// Masks use the inclusive convention at exact boundaries.
inline PixelJacobian jacobian_from_trace(const IspTrace& t, const IspParams& p) {
  PixelJacobian out;
  const double a = p.alpha();
  Vec3 left{};
  Vec3 right{};
  for (std::size_t c = 0; c < 3; ++c) {
    out.mask_s[c] = inclusive_unit_mask(t.s_pre[c]);
    out.mask_w[c] = inclusive_unit_mask(t.u_pre[c]);
    out.mask_gamma[c] = t.v[c] >= p.epsilon ? 1.0 : 0.0;
    const double tone = 6.0 * t.g[c] * (1.0 - t.g[c]);
    const double v_clamped = std::fmax(t.v[c], p.epsilon);
    const double gamma_slope = out.mask_gamma[c] * a * std::pow(v_clamped, a - 1.0);
    left[c] = out.mask_s[c] * tone * gamma_slope;
    right[c] = out.mask_w[c] * p.wb_gains[c];
  }
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) out.j(r, c) = left[r] * p.ccm(r, c) * right[c];
  return out;
}

inline PixelJacobian jacobian_at(const Vec3& l, const IspParams& p) {
  if (!all_finite(l)) throw NumericalError("jacobian_at: non-finite linear input");
  return jacobian_from_trace(trace_pixel(l, p), p);
}

/// Row-major per-pixel Jacobians of an image.
struct JacobianField {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<PixelJacobian> pixels;

  const PixelJacobian& at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

inline JacobianField jacobian_image(const LinearImage& img, const IspParams& p, unsigned threads = 0) {
  JacobianField out{img.height(), img.width(), std::vector<PixelJacobian>(img.pixel_count())};
  parallel_rows(img.height(), threads, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = 0; c < img.width(); ++c) {
        const Vec3 l = img.pixel(r, c);
        if (!all_finite(l)) throw PixelError("non-finite linear input", r, c);
        out.pixels[r * img.width() + c] = jacobian_at(l, p);
      }
  });
  return out;
}

}  // namespace ispinv
