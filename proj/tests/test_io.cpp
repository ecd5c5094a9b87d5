#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"

using namespace ispinv;
using testing_support::fixture;
using testing_support::temp_dir;

namespace {

std::vector<std::uint8_t> bytes_of(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

LinearImage random_linear(std::uint64_t seed, std::size_t h, std::size_t w) {
  Rng rng(seed);
  LinearImage img(h, w);
  for (auto& x : img.values()) x = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace

TEST(FloatContainer, RoundTripIsLosslessForFloatPayloads) {
  const auto dir = temp_dir("container");
  const LinearImage img = random_linear(1, 7, 5);
  io::write_linear(dir / "a.isf", img);
  EXPECT_TRUE(io::read_linear(dir / "a.isf") == img);
  SrgbImage s(3, 2, 0.25);
  io::write_srgb_float(dir / "s.isf", s);
  EXPECT_TRUE(io::read_srgb_float(dir / "s.isf") == s);
}

TEST(FloatContainer, DoublesRoundToNearestFloat) {
  const auto dir = temp_dir("rounding");
  LinearImage img(1, 1);
  img.set_pixel(0, {0.1, 1.0 / 3.0, 0.7});
  io::write_linear(dir / "r.isf", img);
  const LinearImage back = io::read_linear(dir / "r.isf");
  EXPECT_EQ(back.pixel(0)[0], static_cast<double>(0.1f));
  EXPECT_EQ(back.pixel(0)[1], static_cast<double>(1.0f / 3.0f));
}

TEST(FloatContainer, ByteExactDeterminism) {
  const auto dir = temp_dir("determinism");
  const LinearImage img = random_linear(2, 9, 4);
  io::write_linear(dir / "a.isf", img);
  io::write_linear(dir / "b.isf", img);
  EXPECT_EQ(bytes_of(dir / "a.isf"), bytes_of(dir / "b.isf"));
}

TEST(FloatContainer, HeaderLayout) {
  const auto dir = temp_dir("header");
  RawImage raw(2, 4, BayerPattern::GRBG, 0.5);
  io::write_raw(dir / "raw.isf", raw);
  const auto b = bytes_of(dir / "raw.isf");
  ASSERT_EQ(b.size(), 24u + 4 * 8);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 8), "ISPINV01");
  EXPECT_EQ(b[8], 2);
  EXPECT_EQ(b[12], 4);
  EXPECT_EQ(b[16], 1);
  EXPECT_EQ(b[20], 2);  // raw
  EXPECT_EQ(b[21], 2);  // GRBG
  // 0.5f little-endian = 00 00 00 3f
  EXPECT_EQ(b[24], 0x00);
  EXPECT_EQ(b[27], 0x3f);
  EXPECT_TRUE(io::read_raw(dir / "raw.isf") == raw);
}

TEST(FloatContainer, CorruptionDetected) {
  const auto dir = temp_dir("corrupt");
  io::write_linear(dir / "a.isf", random_linear(3, 2, 2));
  auto b = bytes_of(dir / "a.isf");
  auto bad = b;
  bad[0] = 'X';
  EXPECT_THROW(io::decode(bad), FormatError);
  bad = b;
  bad.pop_back();
  EXPECT_THROW(io::decode(bad), FormatError);
  bad = b;
  bad[20] = 9;
  EXPECT_THROW(io::decode(bad), FormatError);
  EXPECT_THROW(io::read_srgb_float(dir / "a.isf"), FormatError);  // wrong domain
  EXPECT_THROW(io::read_linear(dir / "missing.isf"), FormatError);
  EXPECT_THROW(io::decode(std::vector<std::uint8_t>(10)), FormatError);
}

TEST(FloatContainer, DegradationRoundTrip) {
  const auto dir = temp_dir("degr");
  DegradationMap m{2, 2, BayerPattern::BGGR, {0.25, -0.5, 0.125, 0.0}};
  io::write_degradation(dir / "m.isf", m);
  EXPECT_TRUE(io::read_degradation(dir / "m.isf") == m);
}

TEST(GoldenFixture, LinearParsesToKnownValues) {
  const LinearImage img = io::read_linear(fixture("golden_linear.isf"));
  ASSERT_EQ(img.height(), 5u);
  ASSERT_EQ(img.width(), 4u);
  const std::size_t plane = 20;
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < plane; ++i) {
      const std::size_t k = ch * plane + i;
      EXPECT_EQ(img.at(i / 4, i % 4, ch), static_cast<double>(static_cast<float>((7 * k) % 23 / 22.0)));
    }
}

TEST(GoldenFixture, ParamsParseToKnownValues) {
  const IspParams p = io::read_params(fixture("golden_params.json"));
  EXPECT_EQ(p.wb_gains, (Vec3{2.0, 1.0, 1.5}));
  EXPECT_EQ(p.ccm.rows[0], (Vec3{1.5, -0.375, -0.125}));
  EXPECT_EQ(p.ccm.rows[2], (Vec3{0.0, -0.5, 1.5}));
  EXPECT_EQ(p.gamma, 2.2);
  EXPECT_EQ(p.epsilon, 1e-8);
  EXPECT_FALSE(p.external_ccm);
}

TEST(GoldenFixture, RenderMatchesReferenceWriter) {
  const LinearImage img = io::read_linear(fixture("golden_linear.isf"));
  const IspParams p = io::read_params(fixture("golden_params.json"));
  const auto out = io::to_container(forward_isp(img, p, 1), io::Domain::srgb);
  const auto golden = io::read_container(fixture("golden_render.isf"));
  ASSERT_EQ(out.samples.size(), golden.samples.size());
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    EXPECT_LE(std::fabs(out.samples[i] - golden.samples[i]), std::nextafter(golden.samples[i], 2.0f) - golden.samples[i]);
}

TEST(GoldenFixture, RawParsesToKnownValues) {
  const RawImage raw = io::read_raw(fixture("golden_raw.isf"));
  EXPECT_EQ(raw.pattern, BayerPattern::RGGB);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(raw.data[k], (5 * k) % 17 / 16.0);
}

TEST(Params, RoundTripAndStrictKeys) {
  const auto dir = temp_dir("params");
  const IspParams p = testing_support::random_params(3);
  io::write_params(dir / "p.json", p);
  EXPECT_EQ(io::read_params(dir / "p.json"), p);

  io::json j = io::params_to_json(p);
  j["extra"] = 1;
  EXPECT_THROW(io::params_from_json(j), FormatError);
  EXPECT_NO_THROW(io::params_from_json(j, false));

  io::json ext{{"wb_gains", {1, 1, 1}}, {"ccm", {{1.2, 0, 0}, {0, 1, 0}, {0, 0, 1}}}};
  const IspParams e = io::params_from_json(ext);
  EXPECT_TRUE(e.external_ccm);
  EXPECT_EQ(e.gamma, 2.2);
  ext["ccm_source"] = "generated";
  EXPECT_THROW(io::params_from_json(ext), InvalidArgument);
  EXPECT_THROW(io::params_from_json(io::json{{"ccm", {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}}), FormatError);
  EXPECT_THROW(io::params_from_json(io::json{{"wb_gains", {1, 1}}, {"ccm", {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}}),
               FormatError);
}

TEST(Json, InvalidFileReported) {
  const auto dir = temp_dir("json");
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(io::read_json(dir / "bad.json"), FormatError);
}

TEST(Png, QuantizesOnExport) {
  const auto dir = temp_dir("png");
  SrgbImage s(2, 3);
  Rng rng(4);
  for (auto& x : s.values()) x = rng.uniform();
  io::write_srgb(dir / "s.png", s);
  const SrgbImage back = io::read_srgb(dir / "s.png");
  ASSERT_TRUE(back.same_shape(s));
  for (std::size_t i = 0; i < s.values().size(); ++i)
    EXPECT_EQ(back.values()[i], std::round(s.values()[i] * 255.0) / 255.0);
  io::write_srgb(dir / "t.png", s);
  EXPECT_EQ(bytes_of(dir / "s.png"), bytes_of(dir / "t.png"));
  EXPECT_EQ(io::quantize8(-1.0), 0);
  EXPECT_EQ(io::quantize8(2.0), 255);
}

TEST(CorpusManifest, WriteReadRoundTrip) {
  const auto dir = temp_dir("manifest");
  const Corpus c = make_corpus(testing_support::synth_config(5, 8), 3);
  io::write_corpus(dir, c);
  const io::json m = io::read_json(dir / "manifest.json");
  EXPECT_EQ(m["synth_config"]["seed"], 5);
  EXPECT_EQ(m["synth_config"]["rng"], "ispinv-rng-v1/mt19937_64+splitmix64");
  EXPECT_EQ(m["library"]["version"], kVersion);
  const Corpus back = io::read_corpus(dir / "manifest.json");
  ASSERT_EQ(back.entries.size(), 3u);
  EXPECT_EQ(back.config.seed, 5u);
  EXPECT_EQ(back.config.ccm_presets.size(), c.config.ccm_presets.size());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.entries[i].id, c.entries[i].id);
    EXPECT_EQ(back.entries[i].params, c.entries[i].params);
    for (std::size_t k = 0; k < c.entries[i].l_b.values().size(); ++k)
      EXPECT_EQ(back.entries[i].l_b.values()[k], static_cast<double>(static_cast<float>(c.entries[i].l_b.values()[k])));
  }
  // Byte-exact regeneration.
  const auto dir2 = temp_dir("manifest2");
  io::write_corpus(dir2, make_corpus(testing_support::synth_config(5, 8), 3));
  for (const auto& f : std::filesystem::directory_iterator(dir))
    EXPECT_EQ(bytes_of(f.path()), bytes_of(dir2 / f.path().filename())) << f.path();
}

TEST(Report, EmbedsConfigAndVersion) {
  InversionReport r;
  r.n_tsvd = 3;
  InversionConfig cfg;
  cfg.lambda_r = 0.5;
  const io::json j = io::report_to_json(r, cfg);
  EXPECT_EQ(j["config"]["lambda_r"], 0.5);
  EXPECT_EQ(j["config"]["beta"], 1e-6);
  EXPECT_EQ(j["n_tsvd"], 3);
  EXPECT_EQ(j["library"]["version"], kVersion);
  EXPECT_EQ(io::number_or_inf(std::numeric_limits<double>::infinity()), "inf");
}

TEST(CcmPresets, ShippedPresetsAreRowStochastic) {
  const auto presets = testing_support::presets();
  ASSERT_GE(presets.size(), 2u);
  for (const auto& m : presets)
    for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(m(r, 0) + m(r, 1) + m(r, 2), 1.0, 1e-9);
}
