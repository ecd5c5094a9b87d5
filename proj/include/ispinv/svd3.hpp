#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "ispinv/linalg.hpp"

namespace ispinv {

/// J = U * diag(sigma) * V^T with sigma sorted nonincreasing.
struct Svd3 {
  Mat3 u = Mat3::identity();
  Vec3 sigma{};
  Mat3 v = Mat3::identity();

  Mat3 reconstruct() const { return u * Mat3::diag(sigma) * transpose(v); }
};

namespace detail {

inline Vec3 orthonormal_complement(const Vec3& a) {
  // Pick the axis least aligned with a, then Gram-Schmidt.
  std::size_t k = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (std::fabs(a[i]) < std::fabs(a[k])) k = i;
  Vec3 e{};
  e[k] = 1.0;
  const Vec3 w = e - dot(a, e) * a;
  return (1.0 / norm2(w)) * w;
}

}  // namespace detail

/// Singular value decomposition of a 3x3 matrix by one-sided (Hestenes)
/// Jacobi rotations. Orthogonalizes the columns of J directly, so small
/// singular values keep full relative accuracy.
inline Svd3 svd3(const Mat3& j) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr int max_sweeps = 60;
  static constexpr std::size_t pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};

  Mat3 a = j;
  Mat3 v = Mat3::identity();
  // Columns below this squared norm are rounding noise of an exactly
  // rank-deficient J; rotating against them never converges.
  double frob2 = 0.0;
  for (const auto& row : a.rows) frob2 += dot(row, row);
  const double noise2 = 16.0 * eps * eps * frob2;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (const auto& pq : pairs) {
      const std::size_t p = pq[0];
      const std::size_t q = pq[1];
      double alpha = 0.0, beta = 0.0, gamma = 0.0;
      for (std::size_t r = 0; r < 3; ++r) {
        alpha += a(r, p) * a(r, p);
        beta += a(r, q) * a(r, q);
        gamma += a(r, p) * a(r, q);
      }
      if (gamma == 0.0 || std::fabs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
      if (std::fmin(alpha, beta) <= noise2) continue;
      const double zeta = (beta - alpha) / (2.0 * gamma);
      const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::hypot(1.0, zeta));
      const double c = 1.0 / std::sqrt(1.0 + t * t);
      const double s = c * t;
      for (std::size_t r = 0; r < 3; ++r) {
        const double ap = a(r, p), aq = a(r, q);
        a(r, p) = c * ap - s * aq;
        a(r, q) = s * ap + c * aq;
        const double vp = v(r, p), vq = v(r, q);
        v(r, p) = c * vp - s * vq;
        v(r, q) = s * vp + c * vq;
      }
      rotated = true;
    }
    if (!rotated) break;
  }

  std::array<std::size_t, 3> order{0, 1, 2};
  Vec3 norms{norm2(a.col(0)), norm2(a.col(1)), norm2(a.col(2))};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  Svd3 out;
  for (std::size_t i = 0; i < 3; ++i) {
    out.sigma[i] = norms[order[i]];
    out.v.set_col(i, v.col(order[i]));
  }

  // Columns whose singular value is negligible carry no reliable direction;
  // complete U from the dominant ones instead.
  const double negligible = std::fmax(out.sigma[0] * eps, std::sqrt(noise2));
  const double tiny = std::numeric_limits<double>::min();
  std::array<Vec3, 3> cols{};
  std::size_t good = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (out.sigma[i] > negligible && out.sigma[i] > tiny) {
      Vec3 w = a.col(order[i]);
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k < i; ++k) w = w - dot(cols[k], w) * cols[k];
      const double n = norm2(w);
      if (n > tiny) {
        cols[i] = (1.0 / n) * w;
        ++good;
        continue;
      }
    }
    break;
  }
  if (good == 0) cols[0] = {1.0, 0.0, 0.0};
  if (good <= 1) cols[1] = detail::orthonormal_complement(cols[0]);
  if (good <= 2) {
    cols[2] = cross(cols[0], cols[1]);
    const Vec3 hint = a.col(order[2]);
    if (dot(cols[2], hint) < 0.0) cols[2] = -1.0 * cols[2];
  }
  for (std::size_t i = 0; i < 3; ++i) out.u.set_col(i, cols[i]);
  return out;
}

}  // namespace ispinv
