#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ispinv/error.hpp"
#include "ispinv/linalg.hpp"

namespace ispinv {

struct LinearDomain {
  static constexpr std::string_view name = "linear";
};
struct SrgbDomain {
  static constexpr std::string_view name = "srgb";
};

/// H x W x 3 image of 64-bit reals, interleaved per pixel, tagged with its
/// color domain so linear and display-referred data cannot be mixed up.
template <class Domain>
class Image {
 public:
  using domain = Domain;
  static constexpr std::size_t channels = 3;

  Image() = default;
  Image(std::size_t height, std::size_t width, double fill = 0.0)
      : height_(height), width_(width), data_(height * width * channels, fill) {
    if (height == 0 || width == 0) throw InvalidArgument("image dimensions must be positive");
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixel_count() const { return height_ * width_; }
  bool empty() const { return data_.empty(); }

  Vec3 pixel(std::size_t row, std::size_t col) const {
    const double* p = &data_[(row * width_ + col) * channels];
    return {p[0], p[1], p[2]};
  }
  Vec3 pixel(std::size_t index) const {
    const double* p = &data_[index * channels];
    return {p[0], p[1], p[2]};
  }
  void set_pixel(std::size_t row, std::size_t col, const Vec3& v) { set_pixel(row * width_ + col, v); }
  void set_pixel(std::size_t index, const Vec3& v) {
    double* p = &data_[index * channels];
    p[0] = v[0];
    p[1] = v[1];
    p[2] = v[2];
  }

  double& at(std::size_t row, std::size_t col, std::size_t c) { return data_[(row * width_ + col) * channels + c]; }
  double at(std::size_t row, std::size_t col, std::size_t c) const {
    return data_[(row * width_ + col) * channels + c];
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const auto& other) const { return height_ == other.height() && width_ == other.width(); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

using LinearImage = Image<LinearDomain>;
using SrgbImage = Image<SrgbDomain>;

/// Signed per-pixel residual in linear space (the Delta L field).
using ResidualImage = Image<LinearDomain>;

template <class A, class B>
void require_same_shape(const A& a, const B& b, std::string_view what) {
  if (a.height() != b.height() || a.width() != b.width())
    throw ShapeMismatch(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                        std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                        std::to_string(b.width()) + ")");
}

/// Clamps every value into [0, 1] and returns how many values were changed.
/// Non-finite values are rejected.
template <class Domain>
std::size_t clamp_on_ingest(Image<Domain>& img) {
  std::size_t changed = 0;
  const auto vals = img.values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double x = vals[i];
    if (!std::isfinite(x)) {
      const std::size_t pixel = i / 3;
      throw PixelError("non-finite value", pixel / img.width(), pixel % img.width());
    }
    const double y = std::clamp(x, 0.0, 1.0);
    if (y != x) {
      vals[i] = y;
      ++changed;
    }
  }
  return changed;
}

enum class BayerPattern { RGGB, BGGR, GRBG, GBRG };

inline std::string_view to_string(BayerPattern p) {
  switch (p) {
    case BayerPattern::RGGB: return "RGGB";
    case BayerPattern::BGGR: return "BGGR";
    case BayerPattern::GRBG: return "GRBG";
    case BayerPattern::GBRG: return "GBRG";
  }
  return "?";
}

inline BayerPattern parse_bayer_pattern(std::string_view s) {
  if (s == "RGGB") return BayerPattern::RGGB;
  if (s == "BGGR") return BayerPattern::BGGR;
  if (s == "GRBG") return BayerPattern::GRBG;
  if (s == "GBRG") return BayerPattern::GBRG;
  throw InvalidArgument("unknown Bayer pattern '" + std::string(s) + "'");
}

/// Color channel (0=R, 1=G, 2=B) sampled at a sensor site.
inline std::size_t bayer_channel(BayerPattern p, std::size_t row, std::size_t col) {
  const std::size_t site = (row & 1u) * 2 + (col & 1u);
  static constexpr std::size_t table[4][4] = {
      {0, 1, 1, 2},  // RGGB
      {2, 1, 1, 0},  // BGGR
      {1, 0, 2, 1},  // GRBG
      {1, 2, 0, 1},  // GBRG
  };
  return table[static_cast<std::size_t>(p)][site];
}

/// Single-plane mosaicked sensor image.
struct RawImage {
  std::size_t height = 0;
  std::size_t width = 0;
  BayerPattern pattern = BayerPattern::RGGB;
  std::vector<double> data;

  RawImage() = default;
  RawImage(std::size_t h, std::size_t w, BayerPattern p, double fill = 0.0)
      : height(h), width(w), pattern(p), data(h * w, fill) {
    if (h == 0 || w == 0) throw InvalidArgument("raw image dimensions must be positive");
  }

  double& at(std::size_t row, std::size_t col) { return data[row * width + col]; }
  double at(std::size_t row, std::size_t col) const { return data[row * width + col]; }

  friend bool operator==(const RawImage&, const RawImage&) = default;
};

/// Signed raw-domain residual between the LR reference frame and the
/// mosaicked, downsampled reconstruction.
struct DegradationMap {
  std::size_t height = 0;
  std::size_t width = 0;
  BayerPattern pattern = BayerPattern::RGGB;
  std::vector<double> data;

  double at(std::size_t row, std::size_t col) const { return data[row * width + col]; }

  friend bool operator==(const DegradationMap&, const DegradationMap&) = default;
};

}  // namespace ispinv
