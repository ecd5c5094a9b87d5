#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ispinv/image.hpp"
#include "ispinv/inverse_naive.hpp"
#include "ispinv/inverse_robust.hpp"
#include "ispinv/io.hpp"
#include "ispinv/isp_forward.hpp"
#include "ispinv/metrics.hpp"
#include "ispinv/synth.hpp"
#include "ispinv/version.hpp"

namespace ispinv {

/// One synthetic case: L_b plays the base reconstruction, S_b its render
/// and S_d an off-manifold perturbation of S_b.
struct CorpusEntry {
  std::string id;
  IspParams params;
  LinearImage l_b;
  SrgbImage s_b;
  SrgbImage s_d;
  double clipped_fraction = 0.0;
};

struct Corpus {
  SynthConfig config;
  std::vector<CorpusEntry> entries;
};

/// Entry i draws params, image and perturbation from streams 3i, 3i+1,
/// 3i+2 of the configured seed, so entries can be regenerated independently.
inline CorpusEntry make_corpus_entry(const SynthConfig& cfg, std::size_t index) {
  Rng params_rng = Rng::stream(cfg.seed, 3 * index);
  Rng image_rng = Rng::stream(cfg.seed, 3 * index + 1);
  Rng perturb_rng = Rng::stream(cfg.seed, 3 * index + 2);
  CorpusEntry e;
  char id[32];
  std::snprintf(id, sizeof id, "case_%04zu", index);
  e.id = id;
  e.params = random_isp_params(cfg, params_rng);
  e.l_b = make_stress_image(cfg, e.params, image_rng);
  e.s_b = forward_isp(e.l_b, e.params, 1);
  e.s_d = perturb_srgb(e.s_b, cfg.perturbation_scale, perturb_rng);
  e.clipped_fraction = clipped_fraction(e.l_b, e.params);
  return e;
}

inline Corpus make_corpus(const SynthConfig& cfg, std::size_t count) {
  cfg.validate();
  Corpus c{cfg, {}};
  c.entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) c.entries.push_back(make_corpus_entry(cfg, i));
  return c;
}

namespace io {

inline json synth_config_to_json(const SynthConfig& c) {
  json ranges = json::array();
  for (const auto& g : c.wb_gain_ranges) ranges.push_back(json::array({g.lo, g.hi}));
  json presets = json::array();
  for (const auto& m : c.ccm_presets) presets.push_back(to_json(m));
  return json{{"seed", c.seed},
              {"height", c.height},
              {"width", c.width},
              {"saturation_fraction", c.saturation_fraction},
              {"perturbation_scale", c.perturbation_scale},
              {"wb_gain_ranges", ranges},
              {"ccm_presets", presets},
              {"rng", std::string(Rng::kAlgorithm)}};
}

inline SynthConfig synth_config_from_json(const json& j) {
  SynthConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.height = j.at("height").get<std::size_t>();
  c.width = j.at("width").get<std::size_t>();
  c.saturation_fraction = j.at("saturation_fraction").get<double>();
  c.perturbation_scale = j.at("perturbation_scale").get<double>();
  const auto& ranges = j.at("wb_gain_ranges");
  for (std::size_t k = 0; k < 3; ++k) c.wb_gain_ranges[k] = {ranges.at(k).at(0).get<double>(), ranges.at(k).at(1).get<double>()};
  for (const auto& m : j.at("ccm_presets")) c.ccm_presets.push_back(mat3_from_json(m, "ccm_presets"));
  return c;
}

/// Writes every entry's images and parameters plus manifest.json into dir.
inline void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  json entries = json::array();
  for (const auto& e : corpus.entries) {
    const std::string params = e.id + "_params.json";
    const std::string lb = e.id + "_lb.isf";
    const std::string sb = e.id + "_sb.isf";
    const std::string sd = e.id + "_sd.isf";
    write_params(dir / params, e.params);
    write_linear(dir / lb, e.l_b);
    write_srgb_float(dir / sb, e.s_b);
    write_srgb_float(dir / sd, e.s_d);
    entries.push_back(json{{"id", e.id},
                           {"params", params},
                           {"l_b", lb},
                           {"s_b", sb},
                           {"s_d", sd},
                           {"clipped_fraction", e.clipped_fraction}});
  }
  write_json(dir / "manifest.json", json{{"library", {{"name", "ispinv"}, {"version", kVersion}}},
                                         {"synth_config", synth_config_to_json(corpus.config)},
                                         {"entries", entries}});
}

/// Loads a corpus from its manifest. Images come back at float32
/// precision; S_b is re-rendered from L_b so it stays consistent with it.
inline Corpus read_corpus(const std::filesystem::path& manifest_path) {
  const json m = read_json(manifest_path);
  const auto dir = manifest_path.parent_path();
  Corpus c;
  c.config = synth_config_from_json(m.at("synth_config"));
  for (const auto& item : m.at("entries")) {
    CorpusEntry e;
    e.id = item.at("id").get<std::string>();
    e.params = read_params(dir / item.at("params").get<std::string>());
    e.l_b = read_linear(dir / item.at("l_b").get<std::string>());
    e.s_b = forward_isp(e.l_b, e.params, 1);
    e.s_d = read_srgb_float(dir / item.at("s_d").get<std::string>());
    e.clipped_fraction = item.value("clipped_fraction", 0.0);
    c.entries.push_back(std::move(e));
  }
  return c;
}

}  // namespace io

struct MethodScore {
  std::string method;
  /// Per-entry PSNR of the linear output against L_b.
  std::vector<double> psnr_l;
  /// Per-entry PSNR of forward(output) against S_d.
  std::vector<double> psnr_srgb;
  double mean_psnr_l = 0.0;
  double mean_psnr_srgb = 0.0;
};

struct SweepPoint {
  double lambda_r = 0.0;
  double mean_psnr_l = 0.0;
  double mean_psnr_srgb = 0.0;
  /// True when every entry's output equals L_b bit for bit.
  bool identical_to_base = false;
};

struct EvalReport {
  std::size_t entries = 0;
  std::size_t pixels = 0;
  MethodScore robust;
  MethodScore first_order_only;
  MethodScore naive;
  InversionReport robust_totals;
  Percentiles robust_delta_l;
  std::vector<SweepPoint> sweep;
};

struct EvalOptions {
  InversionConfig config;
  std::vector<double> lambda_sweep;
  unsigned threads = 0;
};

namespace detail {

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline void finish(MethodScore& m) {
  m.mean_psnr_l = mean_of(m.psnr_l);
  m.mean_psnr_srgb = mean_of(m.psnr_srgb);
}

}  // namespace detail

/// Scores the robust two-stage inversion, its first-order-only ablation and
/// the naive inverse over a corpus, optionally sweeping lambda_r. Results
/// are independent of the thread count.
inline EvalReport evaluate_corpus(const Corpus& corpus, const EvalOptions& opts) {
  EvalReport rep;
  rep.robust.method = "robust";
  rep.first_order_only.method = "first_order_only";
  rep.naive.method = "naive";
  rep.entries = corpus.entries.size();
  std::vector<double> all_norms;
  std::vector<std::vector<double>> sweep_l(opts.lambda_sweep.size()), sweep_s(opts.lambda_sweep.size());
  std::vector<bool> sweep_identical(opts.lambda_sweep.size(), true);

  InversionConfig fo_cfg = opts.config;
  fo_cfg.stages = InversionStages::first_order_only;
  InversionConfig robust_cfg = opts.config;
  robust_cfg.stages = InversionStages::two_stage;
  const InversionOptions inv_opts{false, 1e-9, opts.threads};

  for (const auto& e : corpus.entries) {
    rep.pixels += e.l_b.pixel_count();
    auto score = [&](MethodScore& m, const LinearImage& out) {
      m.psnr_l.push_back(psnr(out, e.l_b));
      m.psnr_srgb.push_back(psnr(forward_isp(out, e.params, opts.threads), e.s_d));
    };

    const auto robust = compute_residual(e.s_d, e.s_b, e.l_b, e.params, robust_cfg, inv_opts);
    score(rep.robust, blend_lambda_r(e.l_b, robust.delta_l, robust_cfg.lambda_r));
    rep.robust_totals.n_well_conditioned += robust.report.n_well_conditioned;
    rep.robust_totals.n_tsvd += robust.report.n_tsvd;
    rep.robust_totals.n_zero_jacobian += robust.report.n_zero_jacobian;
    rep.robust_totals.n_sb_mismatch += robust.report.n_sb_mismatch;
    rep.robust_totals.max_abs_residual_srgb =
        std::fmax(rep.robust_totals.max_abs_residual_srgb, robust.report.max_abs_residual_srgb);
    for (std::size_t i = 0; i < robust.delta_l.pixel_count(); ++i) all_norms.push_back(norm2(robust.delta_l.pixel(i)));

    const auto fo = compute_residual(e.s_d, e.s_b, e.l_b, e.params, fo_cfg, inv_opts);
    score(rep.first_order_only, blend_lambda_r(e.l_b, fo.delta_l, fo_cfg.lambda_r));

    score(rep.naive, naive_invert_image(e.s_d, e.params, opts.threads));

    for (std::size_t k = 0; k < opts.lambda_sweep.size(); ++k) {
      const LinearImage out = blend_lambda_r(e.l_b, robust.delta_l, opts.lambda_sweep[k]);
      sweep_identical[k] = sweep_identical[k] && out == e.l_b;
      sweep_l[k].push_back(psnr(out, e.l_b));
      sweep_s[k].push_back(psnr(forward_isp(out, e.params, opts.threads), e.s_d));
    }
  }
  detail::finish(rep.robust);
  detail::finish(rep.first_order_only);
  detail::finish(rep.naive);
  if (!all_norms.empty()) rep.robust_delta_l = percentiles_of(std::move(all_norms));
  rep.robust_totals.delta_l_percentiles = rep.robust_delta_l;
  for (std::size_t k = 0; k < opts.lambda_sweep.size(); ++k)
    rep.sweep.push_back({opts.lambda_sweep[k], detail::mean_of(sweep_l[k]), detail::mean_of(sweep_s[k]),
                         sweep_identical[k]});
  return rep;
}

namespace io {

inline json method_to_json(const MethodScore& m) {
  json per_l = json::array(), per_s = json::array();
  for (double x : m.psnr_l) per_l.push_back(number_or_inf(x));
  for (double x : m.psnr_srgb) per_s.push_back(number_or_inf(x));
  return json{{"mean_psnr_l", number_or_inf(m.mean_psnr_l)},
              {"mean_psnr_srgb", number_or_inf(m.mean_psnr_srgb)},
              {"psnr_l", per_l},
              {"psnr_srgb", per_s}};
}

/// Report for `eval`. Holds no timing or thread information, so runs with
/// different parallelism produce identical bytes.
inline json eval_report_to_json(const EvalReport& r, const EvalOptions& opts, const SynthConfig& corpus_cfg) {
  json sweep = json::array();
  for (const auto& p : r.sweep)
    sweep.push_back(json{{"lambda_r", p.lambda_r},
                         {"mean_psnr_l", number_or_inf(p.mean_psnr_l)},
                         {"mean_psnr_srgb", number_or_inf(p.mean_psnr_srgb)},
                         {"identical_to_base", p.identical_to_base}});
  return json{{"library", {{"name", "ispinv"}, {"version", kVersion}}},
              {"config", config_to_json(opts.config)},
              {"corpus", synth_config_to_json(corpus_cfg)},
              {"entries", r.entries},
              {"pixels", r.pixels},
              {"methods",
               {{"robust", method_to_json(r.robust)},
                {"first_order_only", method_to_json(r.first_order_only)},
                {"naive", method_to_json(r.naive)}}},
              {"robust_routes",
               {{"n_well_conditioned", r.robust_totals.n_well_conditioned},
                {"n_tsvd", r.robust_totals.n_tsvd},
                {"n_zero_jacobian", r.robust_totals.n_zero_jacobian},
                {"n_sb_mismatch", r.robust_totals.n_sb_mismatch},
                {"max_abs_residual_srgb", r.robust_totals.max_abs_residual_srgb}}},
              {"robust_delta_l_percentiles", percentiles_to_json(r.robust_delta_l)},
              {"lambda_r_sweep", sweep}};
}

}  // namespace io

}  // namespace ispinv
