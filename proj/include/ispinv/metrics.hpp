#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "ispinv/error.hpp"
#include "ispinv/image.hpp"
#include "ispinv/isp_forward.hpp"
#include "ispinv/isp_jacobian.hpp"
#include "ispinv/parallel.hpp"
#include "ispinv/svd3.hpp"

namespace ispinv {

/// Mean squared error over all channels. Summation runs in storage order
/// so the result does not depend on how the inputs were produced.
template <class A, class B>
double mean_squared_error(const A& a, const B& b) {
  require_same_shape(a, b, "mean_squared_error");
  const auto x = a.values();
  const auto y = b.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return sum / static_cast<double>(x.size());
}

/// PSNR in decibels; identical inputs give +infinity.
template <class A, class B>
double psnr(const A& a, const B& b, double peak = 1.0) {
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

struct Percentiles {
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;

  friend bool operator==(const Percentiles&, const Percentiles&) = default;
};

/// Nearest-rank percentile of an already sorted sample.
inline double nearest_rank(std::span<const double> sorted, double pct) {
  if (sorted.empty()) throw InvalidArgument("percentile of an empty sample");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

/// Nearest-rank 50/95/99th percentiles of per-pixel norms.
inline Percentiles percentiles_of(std::vector<double> norms) {
  if (norms.empty()) throw InvalidArgument("delta_l_percentiles: empty field");
  std::sort(norms.begin(), norms.end());
  return {nearest_rank(norms, 50.0), nearest_rank(norms, 95.0), nearest_rank(norms, 99.0)};
}

/// Percentiles of the per-pixel Euclidean norm of a residual field.
inline Percentiles delta_l_percentiles(const ResidualImage& delta_l) {
  std::vector<double> norms;
  norms.reserve(delta_l.pixel_count());
  for (std::size_t i = 0; i < delta_l.pixel_count(); ++i) norms.push_back(norm2(delta_l.pixel(i)));
  return percentiles_of(std::move(norms));
}

/// r = F(l + dl) - F(l) - J(l) dl for one pixel.
inline Vec3 taylor_remainder_pixel(const Vec3& l, const Vec3& dl, const IspParams& p) {
  const Vec3 s0 = forward_pixel(l, p);
  const Vec3 s1 = forward_pixel(l + dl, p);
  const Mat3 j = jacobian_at(l, p).j;
  return (s1 - s0) - j * dl;
}

inline ResidualImage taylor_remainder(const LinearImage& l_b, const ResidualImage& delta_l, const IspParams& p,
                                      unsigned threads = 0) {
  require_same_shape(l_b, delta_l, "taylor_remainder");
  ResidualImage out(l_b.height(), l_b.width());
  parallel_rows(l_b.height(), threads, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = 0; c < l_b.width(); ++c)
        out.set_pixel(r, c, taylor_remainder_pixel(l_b.pixel(r, c), delta_l.pixel(r, c), p));
  });
  return out;
}

struct ScalingFit {
  double exponent = 0.0;
  std::size_t pixels_used = 0;
  std::size_t pixels_excluded = 0;
  std::size_t samples = 0;
};

/// Fits the exponent p in ||r(t dl)|| ~ t^p. Each pixel gets its own
/// intercept (within-pixel least squares), so differing curvature between
/// pixels does not bias the slope. Pixels whose path from l to l + t dl
/// comes within `boundary_margin` of a clip boundary are excluded.
inline ScalingFit remainder_scaling_check(std::span<const Vec3> l_b, std::span<const Vec3> delta_l,
                                          const IspParams& p, std::span<const double> scales,
                                          double boundary_margin = 1e-3, double min_remainder = 1e-14) {
  if (l_b.size() != delta_l.size()) throw ShapeMismatch("remainder_scaling_check: size mismatch");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0 && scales[i] <= 1.0)) throw InvalidArgument("scales must lie in (0, 1]");
    if (i > 0 && !(scales[i] < scales[i - 1])) throw InvalidArgument("scales must be strictly decreasing");
  }
  ScalingFit fit;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < l_b.size(); ++i) {
    bool near_boundary = boundary_distance(l_b[i], p) <= boundary_margin;
    for (double t : scales) near_boundary = near_boundary || boundary_distance(l_b[i] + t * delta_l[i], p) <= boundary_margin;
    if (near_boundary) {
      ++fit.pixels_excluded;
      continue;
    }
    std::vector<double> xs, ys;
    for (double t : scales) {
      const double r = norm2(taylor_remainder_pixel(l_b[i], t * delta_l[i], p));
      if (r > min_remainder) {
        xs.push_back(std::log(t));
        ys.push_back(std::log(r));
      }
    }
    if (xs.size() < 2) continue;
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      mx += xs[k];
      my += ys[k];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(ys.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sxy += (xs[k] - mx) * (ys[k] - my);
      sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    ++fit.pixels_used;
    fit.samples += xs.size();
  }
  if (fit.pixels_used == 0 || sxx == 0.0)
    throw NumericalError("remainder_scaling_check: insufficient nonzero-remainder samples");
  fit.exponent = sxy / sxx;
  return fit;
}

/// Empirical Lipschitz constant of the Jacobian along the segment
/// l -> l + dl: max_k ||J(l + t_k dl) - J(l)||_2 / (t_k ||dl||) with
/// t_k = k / steps. Spectral norms come from svd3.
inline double segment_lipschitz(const Vec3& l, const Vec3& dl, const IspParams& p, int steps = 64) {
  const double len = norm2(dl);
  if (len == 0.0) return 0.0;
  const Mat3 j0 = jacobian_at(l, p).j;
  double best = 0.0;
  for (int k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) / steps;
    const Mat3 diff = jacobian_at(l + t * dl, p).j - j0;
    best = std::fmax(best, svd3(diff).sigma[0] / (t * len));
  }
  return best;
}

}  // namespace ispinv
