#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "ispinv/error.hpp"
#include "ispinv/image.hpp"

namespace ispinv {

enum class DownsampleKernel { area, bilinear };

inline DownsampleKernel parse_downsample_kernel(std::string_view s) {
  if (s == "area") return DownsampleKernel::area;
  if (s == "bilinear") return DownsampleKernel::bilinear;
  throw InvalidArgument("unknown downsampling kernel '" + std::string(s) + "'");
}

namespace detail {

inline double bilinear_sample(const LinearImage& img, double y, double x, std::size_t ch) {
  const double yc = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
  const double xc = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
  const auto y0 = static_cast<std::size_t>(std::floor(yc));
  const auto x0 = static_cast<std::size_t>(std::floor(xc));
  const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
  const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
  const double fy = yc - static_cast<double>(y0);
  const double fx = xc - static_cast<double>(x0);
  const double top = (1.0 - fx) * img.at(y0, x0, ch) + fx * img.at(y0, x1, ch);
  const double bottom = (1.0 - fx) * img.at(y1, x0, ch) + fx * img.at(y1, x1, ch);
  return (1.0 - fy) * top + fy * bottom;
}

}  // namespace detail

/// Reduces resolution by an integer factor. `area` averages each
/// factor x factor block; `bilinear` samples the block center.
inline LinearImage downsample(const LinearImage& img, std::size_t factor,
                              DownsampleKernel kernel = DownsampleKernel::area) {
  if (factor == 0) throw InvalidArgument("downsample factor must be positive");
  if (img.height() % factor != 0 || img.width() % factor != 0)
    throw InvalidArgument("image dimensions " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                          " are not divisible by factor " + std::to_string(factor));
  const std::size_t h = img.height() / factor, w = img.width() / factor;
  LinearImage out(h, w);
  const double inv_area = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch) {
        double value = 0.0;
        if (kernel == DownsampleKernel::area) {
          for (std::size_t dy = 0; dy < factor; ++dy)
            for (std::size_t dx = 0; dx < factor; ++dx) value += img.at(r * factor + dy, c * factor + dx, ch);
          value *= inv_area;
        } else {
          const double y = (static_cast<double>(r) + 0.5) * static_cast<double>(factor) - 0.5;
          const double x = (static_cast<double>(c) + 0.5) * static_cast<double>(factor) - 0.5;
          value = detail::bilinear_sample(img, y, x, ch);
        }
        out.at(r, c, ch) = value;
      }
  return out;
}

/// Keeps, at every site, the channel the Bayer pattern places there.
inline RawImage mosaic(const LinearImage& img, BayerPattern pattern) {
  if (img.height() % 2 != 0 || img.width() % 2 != 0)
    throw InvalidArgument("mosaic requires even dimensions, got " + std::to_string(img.height()) + "x" +
                          std::to_string(img.width()));
  RawImage out(img.height(), img.width(), pattern);
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t c = 0; c < img.width(); ++c) out.at(r, c) = img.at(r, c, bayer_channel(pattern, r, c));
  return out;
}

/// M = L_lr - Mos(Down(L_b)).
inline DegradationMap degradation_map(const RawImage& l_lr, const LinearImage& l_b, std::size_t factor,
                                      BayerPattern pattern, DownsampleKernel kernel = DownsampleKernel::area) {
  if (l_lr.pattern != pattern)
    throw InvalidArgument("Bayer pattern mismatch: reference frame is " + std::string(to_string(l_lr.pattern)) +
                          ", requested " + std::string(to_string(pattern)));
  const RawImage reconstructed = mosaic(downsample(l_b, factor, kernel), pattern);
  if (reconstructed.height != l_lr.height || reconstructed.width != l_lr.width)
    throw ShapeMismatch("degradation_map: Down(L_b) is " + std::to_string(reconstructed.height) + "x" +
                        std::to_string(reconstructed.width) + " but L_lr is " + std::to_string(l_lr.height) + "x" +
                        std::to_string(l_lr.width));
  DegradationMap m{l_lr.height, l_lr.width, pattern, std::vector<double>(l_lr.data.size())};
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = l_lr.data[i] - reconstructed.data[i];
  return m;
}

inline DegradationMap degradation_map(const RawImage& l_lr, const LinearImage& l_b, std::size_t factor,
                                      DownsampleKernel kernel = DownsampleKernel::area) {
  return degradation_map(l_lr, l_b, factor, l_lr.pattern, kernel);
}

struct DegradationSummary {
  double mean_abs = 0.0;
  double max_abs = 0.0;
  /// Mean of M at the four 2x2 sites, row-major ((0,0), (0,1), (1,0), (1,1)).
  std::array<double, 4> site_means{};
  /// Channel letter at each site.
  std::array<char, 4> site_channels{};
};

inline DegradationSummary degradation_summary(const DegradationMap& m) {
  if (m.data.empty()) throw InvalidArgument("degradation_summary: empty map");
  DegradationSummary out;
  std::array<double, 4> sums{};
  std::array<std::size_t, 4> counts{};
  for (std::size_t r = 0; r < m.height; ++r)
    for (std::size_t c = 0; c < m.width; ++c) {
      const double x = m.at(r, c);
      out.mean_abs += std::fabs(x);
      out.max_abs = std::fmax(out.max_abs, std::fabs(x));
      const std::size_t site = (r & 1u) * 2 + (c & 1u);
      sums[site] += x;
      ++counts[site];
    }
  out.mean_abs /= static_cast<double>(m.data.size());
  static constexpr char letters[3] = {'R', 'G', 'B'};
  for (std::size_t s = 0; s < 4; ++s) {
    out.site_means[s] = counts[s] ? sums[s] / static_cast<double>(counts[s]) : 0.0;
    out.site_channels[s] = letters[bayer_channel(m.pattern, s / 2, s % 2)];
  }
  return out;
}

}  // namespace ispinv
