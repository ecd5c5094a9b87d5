#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "ispinv/error.hpp"

namespace ispinv {

using Vec3 = std::array<double, 3>;

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<Vec3, 3> rows{};

  constexpr double& operator()(std::size_t r, std::size_t c) { return rows[r][c]; }
  constexpr double operator()(std::size_t r, std::size_t c) const { return rows[r][c]; }

  static constexpr Mat3 identity() {
    return Mat3{{Vec3{1.0, 0.0, 0.0}, Vec3{0.0, 1.0, 0.0}, Vec3{0.0, 0.0, 1.0}}};
  }
  static constexpr Mat3 zero() { return Mat3{}; }
  static constexpr Mat3 diag(const Vec3& d) {
    return Mat3{{Vec3{d[0], 0.0, 0.0}, Vec3{0.0, d[1], 0.0}, Vec3{0.0, 0.0, d[2]}}};
  }

  constexpr Vec3 col(std::size_t c) const { return {rows[0][c], rows[1][c], rows[2][c]}; }
  constexpr void set_col(std::size_t c, const Vec3& v) {
    rows[0][c] = v[0];
    rows[1][c] = v[1];
    rows[2][c] = v[2];
  }

  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
constexpr Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
constexpr Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double norm_inf(const Vec3& a) {
  return std::fmax(std::fabs(a[0]), std::fmax(std::fabs(a[1]), std::fabs(a[2])));
}
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

constexpr Vec3 operator*(const Mat3& m, const Vec3& v) {
  return {dot(m.rows[0], v), dot(m.rows[1], v), dot(m.rows[2], v)};
}

constexpr Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      out(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c) + a(r, 2) * b(2, c);
  return out;
}

constexpr Mat3 operator-(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (std::size_t r = 0; r < 3; ++r) out.rows[r] = a.rows[r] - b.rows[r];
  return out;
}

constexpr Mat3 transpose(const Mat3& m) {
  Mat3 out;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) out(c, r) = m(r, c);
  return out;
}

/// Largest absolute entry.
inline double max_abs(const Mat3& m) {
  double out = 0.0;
  for (const auto& row : m.rows)
    for (double x : row) out = std::fmax(out, std::fabs(x));
  return out;
}

inline bool all_finite(const Vec3& v) {
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}
inline bool all_finite(const Mat3& m) {
  return all_finite(m.rows[0]) && all_finite(m.rows[1]) && all_finite(m.rows[2]);
}

/// Induced 1-norm (max column sum).
inline double norm1(const Mat3& m) {
  double out = 0.0;
  for (std::size_t c = 0; c < 3; ++c)
    out = std::fmax(out, std::fabs(m(0, c)) + std::fabs(m(1, c)) + std::fabs(m(2, c)));
  return out;
}

inline double determinant(const Mat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

/// LU factorization with partial pivoting of a general 3x3 system.
class Lu3 {
 public:
  explicit Lu3(const Mat3& a) : lu_(a) {
    for (std::size_t k = 0; k < 3; ++k) {
      std::size_t p = k;
      for (std::size_t r = k + 1; r < 3; ++r)
        if (std::fabs(lu_(r, k)) > std::fabs(lu_(p, k))) p = r;
      if (p != k) {
        std::swap(lu_.rows[p], lu_.rows[k]);
        std::swap(perm_[p], perm_[k]);
      }
      if (lu_(k, k) == 0.0) {
        singular_ = true;
        continue;
      }
      for (std::size_t r = k + 1; r < 3; ++r) {
        lu_(r, k) /= lu_(k, k);
        for (std::size_t c = k + 1; c < 3; ++c) lu_(r, c) -= lu_(r, k) * lu_(k, c);
      }
    }
  }

  bool singular() const { return singular_; }

  Vec3 solve(const Vec3& b) const {
    Vec3 y{b[perm_[0]], b[perm_[1]], b[perm_[2]]};
    for (std::size_t r = 1; r < 3; ++r)
      for (std::size_t c = 0; c < r; ++c) y[r] -= lu_(r, c) * y[c];
    for (std::size_t r = 3; r-- > 0;) {
      for (std::size_t c = r + 1; c < 3; ++c) y[r] -= lu_(r, c) * y[c];
      y[r] /= lu_(r, r);
    }
    return y;
  }

  Mat3 inverse() const {
    Mat3 out;
    for (std::size_t c = 0; c < 3; ++c) {
      Vec3 e{};
      e[c] = 1.0;
      out.set_col(c, solve(e));
    }
    return out;
  }

 private:
  Mat3 lu_;
  std::array<std::size_t, 3> perm_{0, 1, 2};
  bool singular_ = false;
};

/// 1-norm condition number; +inf for an exactly singular matrix.
inline double condition_number(const Mat3& m) {
  const Lu3 lu(m);
  if (lu.singular()) return std::numeric_limits<double>::infinity();
  return norm1(m) * norm1(lu.inverse());
}

/// Solves a symmetric positive-definite 3x3 system by Cholesky factorization.
/// Throws NumericalError when a pivot is not safely positive.
inline Vec3 solve_spd3(const Mat3& a, const Vec3& b) {
  const double scale = std::fmax(a(0, 0), std::fmax(a(1, 1), a(2, 2)));
  const double tiny = 64.0 * std::numeric_limits<double>::epsilon() * scale;
  Mat3 l;
  for (std::size_t j = 0; j < 3; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > tiny)) throw NumericalError("normal equations are not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < 3; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  Vec3 y{};
  for (std::size_t i = 0; i < 3; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  Vec3 x{};
  for (std::size_t i = 3; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < 3; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

}  // namespace ispinv
