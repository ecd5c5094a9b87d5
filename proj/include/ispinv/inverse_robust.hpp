#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "ispinv/error.hpp"
#include "ispinv/image.hpp"
#include "ispinv/isp_forward.hpp"
#include "ispinv/isp_jacobian.hpp"
#include "ispinv/linalg.hpp"
#include "ispinv/metrics.hpp"
#include "ispinv/parallel.hpp"
#include "ispinv/svd3.hpp"

namespace ispinv {

enum class InversionStages {
  two_stage,         ///< first-order on well-conditioned pixels, TSVD elsewhere
  first_order_only,  ///< ablation: ridge update everywhere
};

struct InversionConfig {
  double beta = 1e-6;
  double lambda_r = 1.0;
  /// sigma_i is retained iff sigma_i > sigma_rel_threshold * max(sigma_1, sigma_abs_floor).
  double sigma_rel_threshold = 1e-3;
  double sigma_abs_floor = 1e-8;
  /// A pixel is well-conditioned iff sigma_3 >= cond_sigma_min.
  double cond_sigma_min = 1e-3;
  InversionStages stages = InversionStages::two_stage;

  void validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be nonnegative");
    if (!(lambda_r >= 0.0 && lambda_r <= 1.0)) throw InvalidArgument("lambda_r must lie in [0, 1]");
    if (!(sigma_rel_threshold > 0.0) || !(sigma_abs_floor > 0.0) || !(cond_sigma_min > 0.0))
      throw InvalidArgument("thresholds must be positive");
  }
};

/// Ridge solution (J^T J + beta I)^{-1} J^T dS by Cholesky.
inline Vec3 first_order_update(const Mat3& j, const Vec3& delta_s, double beta) {
  const Mat3 jt = transpose(j);
  Mat3 normal = jt * j;
  for (std::size_t i = 0; i < 3; ++i) normal(i, i) += beta;
  return solve_spd3(normal, jt * delta_s);
}

struct TsvdUpdate {
  Vec3 delta_l{};
  /// Coordinates of delta_l in the V basis; exactly zero for truncated
  /// directions.
  Vec3 coeffs{};
  std::size_t rank = 0;
};

inline std::size_t retained_rank(const Vec3& sigma, const InversionConfig& cfg) {
  const double threshold = cfg.sigma_rel_threshold * std::fmax(sigma[0], cfg.sigma_abs_floor);
  std::size_t k = 0;
  while (k < 3 && sigma[k] > threshold) ++k;
  return k;
}

/// Truncated-SVD ridge update: sum over retained i of
/// v_i * sigma_i / (sigma_i^2 + beta) * (u_i . dS).
inline TsvdUpdate tsvd_update(const Svd3& svd, const Vec3& delta_s, const InversionConfig& cfg) {
  TsvdUpdate out;
  out.rank = retained_rank(svd.sigma, cfg);
  for (std::size_t i = 0; i < out.rank; ++i) {
    const double s = svd.sigma[i];
    out.coeffs[i] = s / (s * s + cfg.beta) * dot(svd.u.col(i), delta_s);
  }
  out.delta_l = svd.v * out.coeffs;
  return out;
}

enum class PixelRoute { well_conditioned, tsvd, zero_jacobian };

struct PixelSolution {
  Vec3 delta_l{};
  PixelRoute route = PixelRoute::zero_jacobian;
  Svd3 svd;
  std::size_t tsvd_rank = 0;
};

/// Routes one pixel through the two-stage scheme. m = 1 (first-order) iff
/// sigma_3 >= cond_sigma_min; Jacobians with sigma_1 below the absolute
/// floor get a zero update.
inline PixelSolution solve_pixel(const Mat3& j, const Vec3& delta_s, const InversionConfig& cfg) {
  PixelSolution out;
  out.svd = svd3(j);
  const Vec3& sigma = out.svd.sigma;
  if (sigma[0] < cfg.sigma_abs_floor) return out;
  if (cfg.stages == InversionStages::first_order_only || sigma[2] >= cfg.cond_sigma_min) {
    out.route = PixelRoute::well_conditioned;
    out.delta_l = first_order_update(j, delta_s, cfg.beta);
    return out;
  }
  out.route = PixelRoute::tsvd;
  const TsvdUpdate t = tsvd_update(out.svd, delta_s, cfg);
  out.delta_l = t.delta_l;
  out.tsvd_rank = t.rank;
  return out;
}

struct InversionReport {
  std::size_t n_well_conditioned = 0;
  std::size_t n_tsvd = 0;
  std::size_t n_zero_jacobian = 0;
  /// Pixels whose supplied S_b disagreed with forward(L_b) beyond 1e-9.
  std::size_t n_sb_mismatch = 0;
  Percentiles delta_l_percentiles;
  double max_abs_residual_srgb = 0.0;

  std::size_t total() const { return n_well_conditioned + n_tsvd + n_zero_jacobian; }
};

struct InversionOptions {
  /// Fail instead of counting when S_b disagrees with forward(L_b).
  bool strict = false;
  double sb_tolerance = 1e-9;
  unsigned threads = 0;
};

struct ResidualResult {
  ResidualImage delta_l;
  InversionReport report;
};

/// Computes the per-pixel residual update Delta L around L_b. When S_b is
/// omitted it is rendered from L_b; when supplied, pixels disagreeing with
/// the render are counted (or rejected in strict mode) and the render is used.
inline ResidualResult compute_residual(const SrgbImage& s_d, const std::optional<SrgbImage>& s_b,
                                       const LinearImage& l_b, const IspParams& params,
                                       const InversionConfig& cfg, const InversionOptions& opts = {}) {
  cfg.validate();
  require_same_shape(s_d, l_b, "invert_image (S_d vs L_b)");
  if (s_b) require_same_shape(*s_b, l_b, "invert_image (S_b vs L_b)");

  const std::size_t h = l_b.height(), w = l_b.width();
  ResidualResult out{ResidualImage(h, w), {}};
  std::vector<PixelRoute> routes(h * w);
  std::vector<double> norms(h * w);
  std::vector<double> residuals(h * w);
  std::vector<unsigned char> mismatch(h * w, 0);

  parallel_rows(h, opts.threads, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        const std::size_t idx = r * w + c;
        const Vec3 l = l_b.pixel(idx);
        const Vec3 sd = s_d.pixel(idx);
        if (!all_finite(l) || !all_finite(sd)) throw PixelError("non-finite input", r, c);
        const IspTrace trace = trace_pixel(l, params);
        Vec3 sb = trace.s;
        if (s_b) {
          const Vec3 given = s_b->pixel(idx);
          if (norm_inf(given - trace.s) <= opts.sb_tolerance) {
            sb = given;
          } else {
            if (opts.strict) throw PixelError("S_b disagrees with forward(L_b)", r, c);
            mismatch[idx] = 1;
          }
        }
        const Vec3 delta_s = sd - sb;
        const Mat3 j = jacobian_from_trace(trace, params).j;
        PixelSolution sol;
        try {
          sol = solve_pixel(j, delta_s, cfg);
        } catch (const NumericalError& e) {
          throw PixelError(e.what(), r, c);
        }
        out.delta_l.set_pixel(idx, sol.delta_l);
        routes[idx] = sol.route;
        norms[idx] = norm2(sol.delta_l);
        residuals[idx] = norm_inf(j * sol.delta_l - delta_s);
      }
  });

  InversionReport& rep = out.report;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    switch (routes[i]) {
      case PixelRoute::well_conditioned: ++rep.n_well_conditioned; break;
      case PixelRoute::tsvd: ++rep.n_tsvd; break;
      case PixelRoute::zero_jacobian: ++rep.n_zero_jacobian; break;
    }
    rep.n_sb_mismatch += mismatch[i];
    rep.max_abs_residual_srgb = std::fmax(rep.max_abs_residual_srgb, residuals[i]);
  }
  rep.delta_l_percentiles = percentiles_of(std::move(norms));
  return out;
}

/// L_d = clip(L_b + lambda_r * Delta L, 0, 1).
inline LinearImage blend_lambda_r(const LinearImage& l_b, const ResidualImage& delta_l, double lambda_r) {
  require_same_shape(l_b, delta_l, "blend_lambda_r");
  if (!(lambda_r >= 0.0 && lambda_r <= 1.0)) throw InvalidArgument("lambda_r must lie in [0, 1]");
  LinearImage out(l_b.height(), l_b.width());
  const auto base = l_b.values();
  const auto step = delta_l.values();
  const auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::clamp(base[i] + lambda_r * step[i], 0.0, 1.0);
  return out;
}

struct InversionResult {
  LinearImage l_d;
  InversionReport report;
};

/// Two-stage robust inverse ISP: L_d = clip(L_b + lambda_r * Delta L).
inline InversionResult invert_image(const SrgbImage& s_d, const std::optional<SrgbImage>& s_b,
                                    const LinearImage& l_b, const IspParams& params,
                                    const InversionConfig& cfg, const InversionOptions& opts = {}) {
  auto residual = compute_residual(s_d, s_b, l_b, params, cfg, opts);
  return {blend_lambda_r(l_b, residual.delta_l, cfg.lambda_r), residual.report};
}

}  // namespace ispinv
