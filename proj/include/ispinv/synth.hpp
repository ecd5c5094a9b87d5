#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string_view>
#include <random>
#include <vector>

#include "ispinv/error.hpp"
#include "ispinv/image.hpp"
#include "ispinv/isp_forward.hpp"
#include "ispinv/linalg.hpp"

namespace ispinv {

/// Versioned pseudorandom stream: std::mt19937_64 (whose output sequence
/// is fixed by the C++ standard) seeded through splitmix64, with uniform
/// reals built from the top 53 bits. Standard distributions are avoided
/// because their algorithms differ between library implementations.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "ispinv-rng-v1/mt19937_64+splitmix64";

  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Independent sub-stream for (seed, stream id).
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(splitmix64(seed ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL)));
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

struct GainRange {
  double lo = 1.0;
  double hi = 1.0;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t height = 64;
  std::size_t width = 64;
  double saturation_fraction = 0.3;
  double perturbation_scale = 0.02;
  std::vector<Mat3> ccm_presets;
  std::array<GainRange, 3> wb_gain_ranges{GainRange{1.5, 2.5}, GainRange{1.0, 1.0}, GainRange{1.3, 2.0}};

  void validate() const {
    if (height == 0 || width == 0) throw InvalidArgument("synth: image size must be positive");
    if (!(saturation_fraction >= 0.0 && saturation_fraction <= 1.0))
      throw InvalidArgument("synth: saturation_fraction must lie in [0, 1]");
    if (!(perturbation_scale >= 0.0)) throw InvalidArgument("synth: perturbation_scale must be nonnegative");
    for (const auto& g : wb_gain_ranges)
      if (!(g.lo > 0.0 && g.lo <= g.hi)) throw InvalidArgument("synth: invalid white-balance gain range");
    for (const auto& c : ccm_presets)
      for (std::size_t r = 0; r < 3; ++r)
        if (std::fabs(c(r, 0) + c(r, 1) + c(r, 2) - 1.0) > 1e-9)
          throw InvalidArgument("synth: CCM preset rows must sum to 1");
  }
};

/// Gains uniform in the configured ranges; CCM a random convex combination
/// of the presets with rows renormalized to sum to 1.
inline IspParams random_isp_params(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.ccm_presets.empty()) throw InvalidArgument("synth: empty CCM preset list");
  IspParams p;
  for (std::size_t c = 0; c < 3; ++c) p.wb_gains[c] = rng.uniform(cfg.wb_gain_ranges[c].lo, cfg.wb_gain_ranges[c].hi);

  // Flat Dirichlet weights via normalized exponentials.
  std::vector<double> weights(cfg.ccm_presets.size());
  double total = 0.0;
  for (auto& w : weights) {
    w = -std::log1p(-rng.uniform());
    total += w;
  }
  Mat3 ccm = Mat3::zero();
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double w = total > 0.0 ? weights[k] / total : 1.0 / static_cast<double>(weights.size());
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) ccm(r, c) += w * cfg.ccm_presets[k](r, c);
  }
  for (std::size_t r = 0; r < 3; ++r) {
    const double sum = ccm(r, 0) + ccm(r, 1) + ccm(r, 2);
    for (std::size_t c = 0; c < 3; ++c) ccm(r, c) /= sum;
  }
  p.ccm = ccm;
  p.gamma = 2.2;
  p.epsilon = 1e-8;
  p.external_ccm = false;
  return p;
}

/// True when a pixel hits a white-balance clip (u_pre >= 1) or the gamma
/// clamp (v <= epsilon) in any channel.
inline bool is_clipped_pixel(const Vec3& l, const IspParams& p) {
  const IspTrace t = trace_pixel(l, p);
  for (std::size_t c = 0; c < 3; ++c)
    if (t.u_pre[c] >= 1.0 || t.v[c] <= p.epsilon) return true;
  return false;
}

inline double clipped_fraction(const LinearImage& img, const IspParams& p) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) n += is_clipped_pixel(img.pixel(i), p) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(img.pixel_count());
}

namespace detail {

inline constexpr double kInteriorLo = 0.1;
inline constexpr double kInteriorHi = 0.9;
/// Unclipped stress pixels reach up to the tone-curve shoulder, where
/// 6g(1 - g) -> 0 makes the Jacobian ill-conditioned without any clip.
inline constexpr double kStressInteriorHi = 1.0;
inline constexpr int kMaxRejections = 100000;

/// Pixel with white-balanced and color-corrected values inside [lo, hi]
/// in every channel, found by rejection sampling in u.
inline Vec3 sample_interior_pixel(const IspParams& p, Rng& rng, double lo = kInteriorLo, double hi = kInteriorHi) {
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    const Vec3 u{rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
    const Vec3 v = p.ccm * u;
    bool ok = true;
    Vec3 l{};
    for (std::size_t c = 0; c < 3; ++c) {
      ok = ok && v[c] >= lo && v[c] <= hi && u[c] < 1.0 && v[c] < 1.0;
      l[c] = u[c] / p.wb_gains[c];
      ok = ok && l[c] <= 1.0;
    }
    if (ok) return l;
  }
  throw NumericalError("synth: could not sample an interior pixel for these ISP parameters");
}

/// One channel driven past the white-balance clip (u_pre in [1, 1.5]).
inline std::optional<Vec3> sample_highlight_pixel(const IspParams& p, Rng& rng) {
  Vec3 l = sample_interior_pixel(p, rng);
  const std::size_t first = rng.index(3);
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t c = (first + k) % 3;
    const double hi = std::fmin(1.5, p.wb_gains[c]);
    if (hi < 1.0) continue;
    l[c] = std::fmin(rng.uniform(1.0, hi) / p.wb_gains[c], 1.0);
    if (l[c] * p.wb_gains[c] >= 1.0) return l;
  }
  return std::nullopt;
}

/// Some color-corrected channel at or below the gamma clamp (v <= epsilon).
inline Vec3 sample_dark_pixel(const IspParams& p, Rng& rng) {
  const std::size_t c = rng.index(3);
  Vec3 u{rng.uniform(0.0, 0.3), rng.uniform(0.0, 0.3), rng.uniform(0.0, 0.3)};
  const double cross_talk = p.ccm(c, 0) * u[0] + p.ccm(c, 1) * u[1] + p.ccm(c, 2) * u[2] - p.ccm(c, c) * u[c];
  const double target = -rng.uniform(0.0, 0.01);
  u[c] = p.ccm(c, c) > 0.0 ? (target - cross_talk) / p.ccm(c, c) : -1.0;
  const Vec3 l{u[0] / p.wb_gains[0], u[1] / p.wb_gains[1], u[2] / p.wb_gains[2]};
  if (u[c] >= 0.0 && u[c] < 1.0 && l[c] <= 1.0 && is_clipped_pixel(l, p)) return l;
  return {0.0, 0.0, 0.0};  // black always sits under the clamp
}

}  // namespace detail

/// Linear image where exactly round(saturation_fraction * N) pixels are
/// clipped (half highlight clips, half dark clamps on average) and the rest
/// sit in the interior of every ISP stage.
inline LinearImage make_stress_image(const SynthConfig& cfg, const IspParams& p, Rng& rng) {
  cfg.validate();
  LinearImage img(cfg.height, cfg.width);
  const std::size_t n = img.pixel_count();
  const auto n_stressed = static_cast<std::size_t>(std::llround(cfg.saturation_fraction * static_cast<double>(n)));

  // Fisher-Yates on pixel indices selects which pixels are stressed.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[rng.index(i + 1)]);
  std::vector<unsigned char> stressed(n, 0);
  for (std::size_t i = 0; i < n_stressed; ++i) stressed[order[i]] = 1;

  for (std::size_t i = 0; i < n; ++i) {
    Vec3 l;
    if (!stressed[i]) {
      l = detail::sample_interior_pixel(p, rng, detail::kInteriorLo, detail::kStressInteriorHi);
    } else if (rng.uniform() < 0.5) {
      auto h = detail::sample_highlight_pixel(p, rng);
      l = h ? *h : detail::sample_dark_pixel(p, rng);
    } else {
      l = detail::sample_dark_pixel(p, rng);
    }
    img.set_pixel(i, l);
  }
  return img;
}

/// Adds a smooth bounded field (a few random low-frequency cosines per
/// channel, normalized so |delta| <= scale) and clamps to [0, 1].
inline SrgbImage perturb_srgb(const SrgbImage& s_b, double scale, Rng& rng) {
  if (!(scale >= 0.0)) throw InvalidArgument("perturbation scale must be nonnegative");
  constexpr int kWaves = 4;
  struct Wave {
    double amp, fy, fx, phase;
  };
  std::array<std::array<Wave, kWaves>, 3> waves{};
  std::array<double, 3> amp_sum{};
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (auto& w : waves[ch]) {
      w = {rng.uniform(0.2, 1.0), rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0),
           rng.uniform(0.0, 2.0 * std::numbers::pi)};
      amp_sum[ch] += w.amp;
    }
  SrgbImage out(s_b.height(), s_b.width());
  const double h = static_cast<double>(s_b.height()), wd = static_cast<double>(s_b.width());
  for (std::size_t r = 0; r < s_b.height(); ++r)
    for (std::size_t c = 0; c < s_b.width(); ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) {
        double field = 0.0;
        for (const auto& w : waves[ch])
          field += w.amp * std::cos(2.0 * std::numbers::pi * (w.fy * static_cast<double>(r) / h +
                                                              w.fx * static_cast<double>(c) / wd) +
                                    w.phase);
        const double delta = std::clamp(scale * field / amp_sum[ch], -scale, scale);
        out.at(r, c, ch) = std::clamp(s_b.at(r, c, ch) + delta, 0.0, 1.0);
      }
  return out;
}

}  // namespace ispinv
