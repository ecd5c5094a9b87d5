#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "ispinv/ispinv.hpp"
#include "oracles.hpp"

namespace testing_support {

inline std::vector<ispinv::Mat3> presets() { return ispinv::io::read_ccm_presets(ispinv::io::default_ccm_preset_path()); }

inline ispinv::SynthConfig synth_config(std::uint64_t seed, std::size_t size = 64) {
  ispinv::SynthConfig cfg;
  cfg.seed = seed;
  cfg.height = cfg.width = size;
  cfg.ccm_presets = presets();
  return cfg;
}

inline ispinv::IspParams random_params(std::uint64_t seed) {
  auto cfg = synth_config(seed);
  ispinv::Rng rng = ispinv::Rng::stream(seed, 99);
  return ispinv::random_isp_params(cfg, rng);
}

inline oracle::Params to_oracle(const ispinv::IspParams& p) {
  oracle::Params o;
  for (int i = 0; i < 3; ++i) {
    o.w[i] = p.wb_gains[i];
    for (int j = 0; j < 3; ++j) o.c[i][j] = p.ccm(i, j);
  }
  o.gamma = p.gamma;
  o.eps = p.epsilon;
  return o;
}

inline ispinv::IspParams identity_params() {
  ispinv::IspParams p;
  p.wb_gains = {1.0, 1.0, 1.0};
  p.ccm = ispinv::Mat3::identity();
  return p;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ispinv_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(ISPINV_TEST_DATA_DIR) / name;
}

}  // namespace testing_support
