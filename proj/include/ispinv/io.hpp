#pragma once

// File formats:
//
//  * Float container (.isf): 24-byte header then little-endian float32
//    samples stored planar (channel, row, column).
//      bytes 0-7   magic "ISPINV01"
//      bytes 8-11  uint32 height
//      bytes 12-15 uint32 width
//      bytes 16-19 uint32 channel count (3 for RGB, 1 for mosaicked data)
//      byte  20    domain: 0 linear, 1 srgb, 2 raw, 3 degradation map
//      byte  21    Bayer pattern 0 RGGB, 1 BGGR, 2 GRBG, 3 GBRG, 255 none
//      bytes 22-23 reserved, zero
//    Internal 64-bit values are rounded to nearest-even float32 on write.
//  * 8-bit sRGB PNG, q = round(255 s), export only.
//  * JSON for ISP parameters, corpus manifests and reports.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include <png.h>

#include "json.hpp"

#include "ispinv/degradation.hpp"
#include "ispinv/error.hpp"
#include "ispinv/image.hpp"
#include "ispinv/inverse_robust.hpp"
#include "ispinv/isp_forward.hpp"
#include "ispinv/version.hpp"

namespace ispinv::io {

using json = nlohmann::json;

inline constexpr char kMagic[8] = {'I', 'S', 'P', 'I', 'N', 'V', '0', '1'};
inline constexpr std::size_t kHeaderSize = 24;

enum class Domain : std::uint8_t { linear = 0, srgb = 1, raw = 2, degradation = 3 };
inline constexpr std::uint8_t kNoPattern = 255;

struct FloatContainer {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  Domain domain = Domain::linear;
  std::uint8_t pattern = kNoPattern;
  /// Planar samples, channel-major.
  std::vector<float> samples;

  friend bool operator==(const FloatContainer&, const FloatContainer&) = default;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline std::vector<std::uint8_t> encode(const FloatContainer& c) {
  const std::size_t expected = std::size_t{c.height} * c.width * c.channels;
  if (c.samples.size() != expected) throw FormatError("container sample count does not match its header");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 4 * expected);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  detail::put_u32(out, c.height);
  detail::put_u32(out, c.width);
  detail::put_u32(out, c.channels);
  out.push_back(static_cast<std::uint8_t>(c.domain));
  out.push_back(c.pattern);
  out.push_back(0);
  out.push_back(0);
  for (float f : c.samples) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

inline FloatContainer decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("float container truncated (no header)");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw FormatError("float container has bad magic");
  FloatContainer c;
  c.height = detail::get_u32(bytes.data() + 8);
  c.width = detail::get_u32(bytes.data() + 12);
  c.channels = detail::get_u32(bytes.data() + 16);
  const std::uint8_t domain = bytes[20];
  c.pattern = bytes[21];
  if (domain > 3) throw FormatError("float container has unknown domain " + std::to_string(domain));
  c.domain = static_cast<Domain>(domain);
  if (c.pattern != kNoPattern && c.pattern > 3) throw FormatError("float container has unknown Bayer pattern");
  if (c.height == 0 || c.width == 0 || (c.channels != 1 && c.channels != 3))
    throw FormatError("float container has invalid dimensions");
  const std::size_t n = std::size_t{c.height} * c.width * c.channels;
  if (bytes.size() != kHeaderSize + 4 * n) throw FormatError("float container size does not match its header");
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.samples[i] = std::bit_cast<float>(detail::get_u32(bytes.data() + kHeaderSize + 4 * i));
  return c;
}

inline void write_container(const std::filesystem::path& path, const FloatContainer& c) {
  const auto bytes = encode(c);
  detail::write_file(path, bytes.data(), bytes.size());
}

inline FloatContainer read_container(const std::filesystem::path& path) { return decode(detail::read_file(path)); }

template <class D>
FloatContainer to_container(const Image<D>& img, Domain domain) {
  FloatContainer c{static_cast<std::uint32_t>(img.height()), static_cast<std::uint32_t>(img.width()), 3, domain,
                   kNoPattern, {}};
  c.samples.resize(img.pixel_count() * 3);
  const std::size_t plane = img.pixel_count();
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t ch = 0; ch < 3; ++ch) c.samples[ch * plane + i] = static_cast<float>(img.values()[i * 3 + ch]);
  return c;
}

template <class D>
Image<D> from_container(const FloatContainer& c, Domain expected) {
  if (c.domain != expected) throw FormatError("float container holds the wrong domain");
  if (c.channels != 3) throw FormatError("expected a 3-channel float container");
  Image<D> img(c.height, c.width);
  const std::size_t plane = img.pixel_count();
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t ch = 0; ch < 3; ++ch) img.values()[i * 3 + ch] = static_cast<double>(c.samples[ch * plane + i]);
  return img;
}

inline void write_linear(const std::filesystem::path& path, const LinearImage& img) {
  write_container(path, to_container(img, Domain::linear));
}
inline LinearImage read_linear(const std::filesystem::path& path) {
  return from_container<LinearDomain>(read_container(path), Domain::linear);
}
inline void write_srgb_float(const std::filesystem::path& path, const SrgbImage& img) {
  write_container(path, to_container(img, Domain::srgb));
}
inline SrgbImage read_srgb_float(const std::filesystem::path& path) {
  return from_container<SrgbDomain>(read_container(path), Domain::srgb);
}

inline void write_raw(const std::filesystem::path& path, const RawImage& raw) {
  FloatContainer c{static_cast<std::uint32_t>(raw.height), static_cast<std::uint32_t>(raw.width), 1, Domain::raw,
                   static_cast<std::uint8_t>(raw.pattern), {}};
  c.samples.assign(raw.data.begin(), raw.data.end());
  write_container(path, c);
}

inline RawImage read_raw(const std::filesystem::path& path) {
  const FloatContainer c = read_container(path);
  if (c.domain != Domain::raw || c.channels != 1) throw FormatError("expected a single-channel raw container");
  if (c.pattern == kNoPattern) throw FormatError("raw container carries no Bayer pattern");
  RawImage raw(c.height, c.width, static_cast<BayerPattern>(c.pattern));
  for (std::size_t i = 0; i < raw.data.size(); ++i) raw.data[i] = c.samples[i];
  return raw;
}

inline void write_degradation(const std::filesystem::path& path, const DegradationMap& m) {
  FloatContainer c{static_cast<std::uint32_t>(m.height), static_cast<std::uint32_t>(m.width), 1,
                   Domain::degradation, static_cast<std::uint8_t>(m.pattern), {}};
  c.samples.assign(m.data.begin(), m.data.end());
  write_container(path, c);
}

inline DegradationMap read_degradation(const std::filesystem::path& path) {
  const FloatContainer c = read_container(path);
  if (c.domain != Domain::degradation || c.channels != 1 || c.pattern == kNoPattern)
    throw FormatError("expected a degradation-map container");
  DegradationMap m{c.height, c.width, static_cast<BayerPattern>(c.pattern), {}};
  m.data.assign(c.samples.begin(), c.samples.end());
  return m;
}

// ---------------------------------------------------------------- PNG

inline std::uint8_t quantize8(double s) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(s, 0.0, 1.0) * 255.0));
}

inline void write_png(const std::filesystem::path& path, const SrgbImage& img) {
  std::vector<std::uint8_t> buf(img.pixel_count() * 3);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = quantize8(img.values()[i]);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buf.data(), 0, nullptr))
    throw FormatError("PNG write failed for '" + path.string() + "': " + image.message);
}

inline SrgbImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw FormatError("PNG read failed for '" + path.string() + "': " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError("PNG decode failed for '" + path.string() + "': " + image.message);
  }
  SrgbImage img(image.height, image.width);
  for (std::size_t i = 0; i < buf.size(); ++i) img.values()[i] = buf[i] / 255.0;
  return img;
}

/// Reads an sRGB image from either a PNG or a float container, by extension.
inline SrgbImage read_srgb(const std::filesystem::path& path) {
  return path.extension() == ".png" ? read_png(path) : read_srgb_float(path);
}

inline void write_srgb(const std::filesystem::path& path, const SrgbImage& img) {
  if (path.extension() == ".png")
    write_png(path, img);
  else
    write_srgb_float(path, img);
}

// ---------------------------------------------------------------- JSON

inline json to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
inline json to_json(const Mat3& m) { return json::array({to_json(m.rows[0]), to_json(m.rows[1]), to_json(m.rows[2])}); }

inline Vec3 vec3_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) throw FormatError("'" + key + "' must be an array of 3 numbers");
  Vec3 v;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw FormatError("'" + key + "' must contain numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

inline Mat3 mat3_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) throw FormatError("'" + key + "' must be an array of 3 rows");
  Mat3 m;
  for (std::size_t r = 0; r < 3; ++r) m.rows[r] = vec3_from_json(j[r], key);
  return m;
}

inline json params_to_json(const IspParams& p) {
  return json{{"wb_gains", to_json(p.wb_gains)},
              {"ccm", to_json(p.ccm)},
              {"gamma", p.gamma},
              {"epsilon", p.epsilon},
              {"ccm_source", p.external_ccm ? "external" : "generated"}};
}

/// Parses ISP parameters. Missing gamma/epsilon take their defaults; a CCM
/// not marked "generated" is treated as external. Unknown keys are rejected
/// in strict mode.
inline IspParams params_from_json(const json& j, bool strict = true) {
  if (!j.is_object()) throw FormatError("ISP parameter file must hold a JSON object");
  static const std::set<std::string> known{"wb_gains", "ccm", "gamma", "epsilon", "ccm_source"};
  if (strict)
    for (const auto& [key, _] : j.items())
      if (!known.contains(key)) throw FormatError("unknown key '" + key + "' in ISP parameter file");
  if (!j.contains("wb_gains") || !j.contains("ccm")) throw FormatError("ISP parameter file needs 'wb_gains' and 'ccm'");
  IspParams p;
  p.wb_gains = vec3_from_json(j["wb_gains"], "wb_gains");
  p.ccm = mat3_from_json(j["ccm"], "ccm");
  if (j.contains("gamma")) p.gamma = j["gamma"].get<double>();
  if (j.contains("epsilon")) p.epsilon = j["epsilon"].get<double>();
  p.external_ccm = j.value("ccm_source", std::string("external")) != "generated";
  p.validate();
  return p;
}

inline json read_json(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

/// Writes pretty-printed JSON with sorted keys and a trailing newline, so
/// identical content always produces identical bytes.
inline void write_json(const std::filesystem::path& path, const json& j) {
  const std::string text = j.dump(2) + "\n";
  detail::write_file(path, text.data(), text.size());
}

inline IspParams read_params(const std::filesystem::path& path, bool strict = true) {
  return params_from_json(read_json(path), strict);
}
inline void write_params(const std::filesystem::path& path, const IspParams& p) { write_json(path, params_to_json(p)); }

/// JSON cannot carry infinities; PSNR of identical images becomes "inf".
inline json number_or_inf(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  return x;
}

inline json config_to_json(const InversionConfig& c) {
  return json{{"beta", c.beta},
              {"lambda_r", c.lambda_r},
              {"sigma_rel_threshold", c.sigma_rel_threshold},
              {"sigma_abs_floor", c.sigma_abs_floor},
              {"cond_sigma_min", c.cond_sigma_min},
              {"stages", c.stages == InversionStages::two_stage ? "two_stage" : "first_order_only"}};
}

inline json percentiles_to_json(const Percentiles& p) { return json{{"p50", p.p50}, {"p95", p.p95}, {"p99", p.p99}}; }

inline json report_to_json(const InversionReport& r, const InversionConfig& cfg) {
  return json{{"library", {{"name", "ispinv"}, {"version", kVersion}}},
              {"config", config_to_json(cfg)},
              {"n_well_conditioned", r.n_well_conditioned},
              {"n_tsvd", r.n_tsvd},
              {"n_zero_jacobian", r.n_zero_jacobian},
              {"n_sb_mismatch", r.n_sb_mismatch},
              {"delta_l_percentiles", percentiles_to_json(r.delta_l_percentiles)},
              {"max_abs_residual_srgb", r.max_abs_residual_srgb}};
}

inline std::vector<Mat3> read_ccm_presets(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (!j.is_object() || !j.contains("presets") || !j["presets"].is_array())
    throw FormatError("CCM preset file needs a 'presets' array");
  std::vector<Mat3> out;
  for (const auto& item : j["presets"]) {
    if (!item.is_object() || !item.contains("ccm")) throw FormatError("each CCM preset needs a 'ccm' matrix");
    out.push_back(mat3_from_json(item["ccm"], "ccm"));
  }
  return out;
}

inline std::filesystem::path default_ccm_preset_path() {
#ifdef ISPINV_DATA_DIR
  return std::filesystem::path(ISPINV_DATA_DIR) / "ccm_presets.json";
#else
  return "ccm_presets.json";
#endif
}

}  // namespace ispinv::io
