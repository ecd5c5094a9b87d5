// ispinv command-line tool: forward rendering, robust and naive inversion,
// degradation maps, synthetic corpora and evaluation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ispinv/ispinv.hpp"

namespace fs = std::filesystem;
using ispinv::io::json;

namespace {

// One JSON object per line on stderr.
void log_event(const char* level, const std::string& event, json fields = json::object()) {
  fields["level"] = level;
  fields["event"] = event;
  std::cerr << fields.dump() << '\n';
}

unsigned g_threads = 0;

template <class Image>
void clamp_and_warn(Image& img, const std::string& name) {
  const std::size_t n = ispinv::clamp_on_ingest(img);
  if (n > 0) log_event("warning", "input_clamped", {{"input", name}, {"values", n}});
}

ispinv::LinearImage load_linear(const fs::path& path) {
  auto img = ispinv::io::read_linear(path);
  clamp_and_warn(img, path.string());
  return img;
}

ispinv::SrgbImage load_srgb(const fs::path& path) {
  auto img = ispinv::io::read_srgb(path);
  clamp_and_warn(img, path.string());
  return img;
}

ispinv::RawImage load_raw(const fs::path& path) {
  auto raw = ispinv::io::read_raw(path);
  std::size_t changed = 0;
  for (double& x : raw.data) {
    if (!std::isfinite(x)) throw ispinv::FormatError("non-finite value in raw input '" + path.string() + "'");
    const double y = std::clamp(x, 0.0, 1.0);
    changed += (y != x);
    x = y;
  }
  if (changed > 0) log_event("warning", "input_clamped", {{"input", path.string()}, {"values", changed}});
  return raw;
}

std::vector<ispinv::Mat3> load_presets(const std::string& path) {
  return ispinv::io::read_ccm_presets(path.empty() ? ispinv::io::default_ccm_preset_path() : fs::path(path));
}

struct RenderArgs {
  std::string in, params, out;
};

void run_render(const RenderArgs& a) {
  const auto l = load_linear(a.in);
  const auto p = ispinv::io::read_params(a.params);
  ispinv::io::write_srgb(a.out, ispinv::forward_isp(l, p, g_threads));
  log_event("info", "render_done", {{"out", a.out}, {"height", l.height()}, {"width", l.width()}});
}

struct InvertArgs {
  std::string sd, lb, sb, params, report, out;
  ispinv::InversionConfig cfg;
  bool strict = false;
  bool first_order_only = false;
};

void run_invert(const InvertArgs& a) {
  const auto s_d = load_srgb(a.sd);
  const auto l_b = load_linear(a.lb);
  std::optional<ispinv::SrgbImage> s_b;
  if (!a.sb.empty()) s_b = load_srgb(a.sb);
  const auto p = ispinv::io::read_params(a.params);
  ispinv::InversionConfig cfg = a.cfg;
  if (a.first_order_only) cfg.stages = ispinv::InversionStages::first_order_only;
  const auto result = ispinv::invert_image(s_d, s_b, l_b, p, cfg, {a.strict, 1e-9, g_threads});
  if (result.report.n_sb_mismatch > 0)
    log_event("warning", "sb_mismatch", {{"pixels", result.report.n_sb_mismatch}});
  ispinv::io::write_linear(a.out, result.l_d);
  if (!a.report.empty()) ispinv::io::write_json(a.report, ispinv::io::report_to_json(result.report, cfg));
  log_event("info", "invert_done",
            {{"out", a.out},
             {"n_well_conditioned", result.report.n_well_conditioned},
             {"n_tsvd", result.report.n_tsvd},
             {"n_zero_jacobian", result.report.n_zero_jacobian}});
}

struct NaiveArgs {
  std::string sd, params, out;
};

void run_invert_naive(const NaiveArgs& a) {
  const auto s_d = load_srgb(a.sd);
  const auto p = ispinv::io::read_params(a.params);
  ispinv::io::write_linear(a.out, ispinv::naive_invert_image(s_d, p, g_threads));
  log_event("info", "invert_naive_done", {{"out", a.out}});
}

struct DegradationArgs {
  std::string lr_raw, lb, out, summary;
  std::size_t factor = 4;
  std::string pattern = "RGGB";
  std::string kernel = "area";
};

void run_degradation(const DegradationArgs& a) {
  const auto l_lr = load_raw(a.lr_raw);
  const auto l_b = load_linear(a.lb);
  const auto m = ispinv::degradation_map(l_lr, l_b, a.factor, ispinv::parse_bayer_pattern(a.pattern),
                                         ispinv::parse_downsample_kernel(a.kernel));
  ispinv::io::write_degradation(a.out, m);
  if (!a.summary.empty()) {
    const auto s = ispinv::degradation_summary(m);
    json sites = json::array();
    for (std::size_t k = 0; k < 4; ++k)
      sites.push_back({{"row", k / 2}, {"col", k % 2}, {"channel", std::string(1, s.site_channels[k])},
                       {"mean", s.site_means[k]}});
    ispinv::io::write_json(a.summary, {{"library", {{"name", "ispinv"}, {"version", ispinv::kVersion}}},
                                       {"factor", a.factor},
                                       {"pattern", a.pattern},
                                       {"kernel", a.kernel},
                                       {"mean_abs", s.mean_abs},
                                       {"max_abs", s.max_abs},
                                       {"sites", sites}});
  }
  log_event("info", "degradation_done", {{"out", a.out}});
}

struct SynthArgs {
  std::uint64_t seed = 0;
  std::size_t size = 64;
  double saturation = 0.3;
  double perturb_scale = 0.02;
  std::size_t count = 20;
  std::string out_dir;
  std::string ccm_presets;
};

ispinv::SynthConfig synth_config(const SynthArgs& a) {
  ispinv::SynthConfig cfg;
  cfg.seed = a.seed;
  cfg.height = cfg.width = a.size;
  cfg.saturation_fraction = a.saturation;
  cfg.perturbation_scale = a.perturb_scale;
  cfg.ccm_presets = load_presets(a.ccm_presets);
  return cfg;
}

void run_synth(const SynthArgs& a) {
  const auto corpus = ispinv::make_corpus(synth_config(a), a.count);
  ispinv::io::write_corpus(a.out_dir, corpus);
  log_event("info", "synth_done", {{"out_dir", a.out_dir}, {"entries", corpus.entries.size()}});
}

struct EvalArgs {
  std::string manifest;
  SynthArgs synth;
  ispinv::InversionConfig cfg;
  std::vector<double> lambdas;
  std::string report;
};

void print_table(const ispinv::EvalReport& r) {
  auto num = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%10.3f", x);
    return std::string(buf);
  };
  std::printf("%zu images, %zu pixels\n\n", r.entries, r.pixels);
  std::printf("%-18s %10s %10s\n", "method", "PSNR-L", "PSNR-sRGB");
  for (const auto* m : {&r.robust, &r.first_order_only, &r.naive})
    std::printf("%-18s %s %s\n", m->method.c_str(), num(m->mean_psnr_l).c_str(), num(m->mean_psnr_srgb).c_str());
  std::printf("\nrobust |dL| percentiles: p50 %.4g  p95 %.4g  p99 %.4g\n", r.robust_delta_l.p50,
              r.robust_delta_l.p95, r.robust_delta_l.p99);
  std::printf("robust routes: well-conditioned %zu, tsvd %zu, zero-jacobian %zu\n",
              r.robust_totals.n_well_conditioned, r.robust_totals.n_tsvd, r.robust_totals.n_zero_jacobian);
  if (!r.sweep.empty()) {
    std::printf("\n%-10s %10s %10s\n", "lambda_r", "PSNR-L", "PSNR-sRGB");
    for (const auto& p : r.sweep)
      std::printf("%-10.3g %s %s\n", p.lambda_r, num(p.mean_psnr_l).c_str(), num(p.mean_psnr_srgb).c_str());
  }
}

void run_eval(const EvalArgs& a) {
  const ispinv::Corpus corpus = a.manifest.empty() ? ispinv::make_corpus(synth_config(a.synth), a.synth.count)
                                                   : ispinv::io::read_corpus(a.manifest);
  const ispinv::EvalOptions opts{a.cfg, a.lambdas, g_threads};
  const auto rep = ispinv::evaluate_corpus(corpus, opts);
  print_table(rep);
  if (!a.report.empty()) ispinv::io::write_json(a.report, ispinv::io::eval_report_to_json(rep, opts, corpus.config));
  log_event("info", "eval_done", {{"entries", rep.entries}});
}

struct CheckArgs {
  std::uint64_t seed = 1;
  std::string ccm_presets;
};

bool run_check(const CheckArgs& a) {
  ispinv::SelfCheckConfig cfg;
  cfg.seed = a.seed;
  cfg.ccm_presets = load_presets(a.ccm_presets);
  bool ok = true;
  for (const auto& r : ispinv::run_self_check(cfg)) {
    std::printf("%-28s %s  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok;
}

void add_inversion_flags(CLI::App* cmd, ispinv::InversionConfig& cfg) {
  cmd->add_option("--beta", cfg.beta, "Ridge weight")->capture_default_str();
  cmd->add_option("--sigma-rel", cfg.sigma_rel_threshold, "Relative singular-value retention threshold")
      ->capture_default_str();
  cmd->add_option("--sigma-floor", cfg.sigma_abs_floor, "Absolute singular-value floor")->capture_default_str();
  cmd->add_option("--cond-min", cfg.cond_sigma_min, "Smallest singular value of a well-conditioned pixel")
      ->capture_default_str();
}

void add_synth_flags(CLI::App* cmd, SynthArgs& s) {
  cmd->add_option("--seed", s.seed, "Corpus seed")->capture_default_str();
  cmd->add_option("--size", s.size, "Image height and width")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--saturation", s.saturation, "Fraction of clipped pixels")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--perturb-scale", s.perturb_scale, "Bound on |S_d - S_b|")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--count", s.count, "Number of images")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--ccm-presets", s.ccm_presets, "CCM preset file (JSON)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera ISP forward model and robust inverse ISP"};
  app.set_version_flag("--version", std::string(ispinv::kVersion));
  app.require_subcommand(1);
  app.add_option("--threads", g_threads, "Worker threads (default: ISPINV_THREADS or hardware concurrency)")
      ->check(CLI::NonNegativeNumber);

  RenderArgs render;
  auto* c_render = app.add_subcommand("render", "Forward ISP: linear image to sRGB");
  c_render->add_option("--in", render.in, "Linear float container")->required()->check(CLI::ExistingFile);
  c_render->add_option("--params", render.params, "ISP parameter file")->required()->check(CLI::ExistingFile);
  c_render->add_option("--out", render.out, "Output (.png for 8-bit, otherwise float container)")->required();

  InvertArgs invert;
  auto* c_invert = app.add_subcommand("invert", "Two-stage robust inverse ISP around L_b");
  c_invert->add_option("--sd", invert.sd, "Target sRGB image S_d")->required()->check(CLI::ExistingFile);
  c_invert->add_option("--lb", invert.lb, "Base linear image L_b")->required()->check(CLI::ExistingFile);
  c_invert->add_option("--sb", invert.sb, "Render of L_b (recomputed when omitted)")->check(CLI::ExistingFile);
  c_invert->add_option("--params", invert.params, "ISP parameter file")->required()->check(CLI::ExistingFile);
  c_invert->add_option("--lambda-r", invert.cfg.lambda_r, "Residual blend factor")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  add_inversion_flags(c_invert, invert.cfg);
  c_invert->add_flag("--strict", invert.strict, "Fail when S_b disagrees with the render of L_b");
  c_invert->add_flag("--first-order-only", invert.first_order_only, "Skip the TSVD stage (ablation)");
  c_invert->add_option("--report", invert.report, "Write the inversion report (JSON)");
  c_invert->add_option("--out", invert.out, "Output linear float container")->required();

  NaiveArgs naive;
  auto* c_naive = app.add_subcommand("invert-naive", "Direct sequential inversion baseline");
  c_naive->add_option("--sd", naive.sd, "sRGB image")->required()->check(CLI::ExistingFile);
  c_naive->add_option("--params", naive.params, "ISP parameter file")->required()->check(CLI::ExistingFile);
  c_naive->add_option("--out", naive.out, "Output linear float container")->required();

  DegradationArgs degr;
  auto* c_degr = app.add_subcommand("degradation", "Degradation map M = L_lr - Mos(Down(L_b))");
  c_degr->add_option("--lr-raw", degr.lr_raw, "LR raw reference frame")->required()->check(CLI::ExistingFile);
  c_degr->add_option("--lb", degr.lb, "Reconstructed linear image")->required()->check(CLI::ExistingFile);
  c_degr->add_option("--factor", degr.factor, "Downsampling factor")->capture_default_str()->check(CLI::PositiveNumber);
  c_degr->add_option("--pattern", degr.pattern, "Bayer pattern")
      ->capture_default_str()
      ->check(CLI::IsMember({"RGGB", "BGGR", "GRBG", "GBRG"}));
  c_degr->add_option("--kernel", degr.kernel, "Downsampling kernel")
      ->capture_default_str()
      ->check(CLI::IsMember({"area", "bilinear"}));
  c_degr->add_option("--out", degr.out, "Output degradation-map container")->required();
  c_degr->add_option("--summary", degr.summary, "Write summary statistics (JSON)");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic stress corpus");
  add_synth_flags(c_synth, synth);
  c_synth->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  EvalArgs eval;
  eval.lambdas = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  auto* c_eval = app.add_subcommand("eval", "Compare robust, first-order-only and naive inversion");
  c_eval->add_option("--manifest", eval.manifest, "Corpus manifest (generated from --seed etc. when omitted)")
      ->check(CLI::ExistingFile);
  add_synth_flags(c_eval, eval.synth);
  add_inversion_flags(c_eval, eval.cfg);
  c_eval->add_option("--lambda-r", eval.lambdas, "lambda_r values to sweep")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  c_eval->add_option("--report", eval.report, "Write the evaluation report (JSON)");

  CheckArgs check;
  auto* c_check = app.add_subcommand("check", "Self-test of Jacobian, remainder scaling and SVD");
  c_check->add_option("--seed", check.seed, "Seed")->capture_default_str();
  c_check->add_option("--ccm-presets", check.ccm_presets, "CCM preset file (JSON)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_render) run_render(render);
    if (*c_invert) run_invert(invert);
    if (*c_naive) run_invert_naive(naive);
    if (*c_degr) run_degradation(degr);
    if (*c_synth) run_synth(synth);
    if (*c_eval) run_eval(eval);
    if (*c_check && !run_check(check)) {
      log_event("error", "check_failed");
      return 1;
    }
  } catch (const std::exception& e) {
    log_event("error", "failed", {{"message", e.what()}});
    return 1;
  }
  return 0;
}
