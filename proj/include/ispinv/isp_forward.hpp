#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ispinv/error.hpp"
#include "ispinv/image.hpp"
#include "ispinv/linalg.hpp"
#include "ispinv/parallel.hpp"

namespace ispinv {

/// Global camera parameters of the four-step ISP.
struct IspParams {
  Vec3 wb_gains{1.0, 1.0, 1.0};
  Mat3 ccm = Mat3::identity();
  double gamma = 2.2;
  double epsilon = 1e-8;
  /// CCMs supplied from outside the library skip the row-sum check.
  bool external_ccm = false;

  double alpha() const { return 1.0 / gamma; }

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const {
    for (double w : wb_gains)
      if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("white-balance gains must be positive and finite");
    if (!all_finite(ccm)) throw InvalidArgument("color correction matrix has non-finite entries");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
    if (!external_ccm) {
      for (std::size_t r = 0; r < 3; ++r) {
        const double sum = ccm(r, 0) + ccm(r, 1) + ccm(r, 2);
        if (std::fabs(sum - 1.0) > 1e-9)
          throw InvalidArgument("color correction matrix row " + std::to_string(r) + " does not sum to 1");
      }
    }
  }

  friend bool operator==(const IspParams&, const IspParams&) = default;
};

inline Vec3 clip01(const Vec3& x) {
  return {std::clamp(x[0], 0.0, 1.0), std::clamp(x[1], 0.0, 1.0), std::clamp(x[2], 0.0, 1.0)};
}

struct WhiteBalanced {
  Vec3 u_pre;
  Vec3 u;
};

inline WhiteBalanced white_balance(const Vec3& l, const IspParams& p) {
  const Vec3 u_pre{p.wb_gains[0] * l[0], p.wb_gains[1] * l[1], p.wb_gains[2] * l[2]};
  return {u_pre, clip01(u_pre)};
}

/// No clipping here: the result may be negative or exceed 1.
inline Vec3 color_correct(const Vec3& u, const IspParams& p) { return p.ccm * u; }

inline Vec3 gamma_compress(const Vec3& v, const IspParams& p) {
  const double a = p.alpha();
  return {std::pow(std::fmax(v[0], p.epsilon), a), std::pow(std::fmax(v[1], p.epsilon), a),
          std::pow(std::fmax(v[2], p.epsilon), a)};
}

struct ToneMapped {
  Vec3 s_pre;
  Vec3 s;
};

inline double tone_curve(double g) { return 3.0 * g * g - 2.0 * g * g * g; }

inline ToneMapped tone_map(const Vec3& g) {
  const Vec3 s_pre{tone_curve(g[0]), tone_curve(g[1]), tone_curve(g[2])};
  return {s_pre, clip01(s_pre)};
}

/// Every intermediate of one forward evaluation. The Jacobian reads its
/// masks from here so both sides agree on which branch each channel took.
struct IspTrace {
  Vec3 u_pre, u, v, g, s_pre, s;
};

inline IspTrace trace_pixel(const Vec3& l, const IspParams& p) {
  IspTrace t;
  const auto wb = white_balance(l, p);
  t.u_pre = wb.u_pre;
  t.u = wb.u;
  t.v = color_correct(t.u, p);
  t.g = gamma_compress(t.v, p);
  const auto tm = tone_map(t.g);
  t.s_pre = tm.s_pre;
  t.s = tm.s;
  return t;
}

inline Vec3 forward_pixel(const Vec3& l, const IspParams& p) { return trace_pixel(l, p).s; }

/// Forward ISP over an image. Pixels are independent, so rows are split
/// across `threads` workers (0 = default) with bit-identical results.
inline SrgbImage forward_isp(const LinearImage& img, const IspParams& p, unsigned threads = 0) {
  SrgbImage out(img.height(), img.width());
  parallel_rows(img.height(), threads, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = 0; c < img.width(); ++c) {
        const Vec3 l = img.pixel(r, c);
        if (!all_finite(l)) throw PixelError("non-finite linear input", r, c);
        out.set_pixel(r, c, forward_pixel(l, p));
      }
  });
  return out;
}

/// Smallest distance of any intermediate to a clip or clamp boundary.
/// Derivatives are one-sided at these boundaries.
inline double boundary_distance(const Vec3& l, const IspParams& p) {
  const IspTrace t = trace_pixel(l, p);
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < 3; ++c) {
    d = std::fmin(d, std::fabs(t.u_pre[c]));
    d = std::fmin(d, std::fabs(t.u_pre[c] - 1.0));
    d = std::fmin(d, std::fabs(t.v[c] - p.epsilon));
    d = std::fmin(d, std::fabs(t.s_pre[c]));
    d = std::fmin(d, std::fabs(t.s_pre[c] - 1.0));
  }
  return d;
}

}  // namespace ispinv
