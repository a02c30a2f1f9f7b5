// splatlab command-line front end.
//
// Subcommands: fit, render, epa, eval, bench. Every run is driven by a plain
// key=value config file (see README for the per-subcommand keys); the shared
// flags --seed, --out-dir, --protocol, and --epa override the corresponding
// config entries. Exit codes: 0 success, 2 validation/usage error, 3 I/O
// error.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "splatlab/bench.hpp"
#include "splatlab/camera.hpp"
#include "splatlab/config.hpp"
#include "splatlab/error.hpp"
#include "splatlab/experts.hpp"
#include "splatlab/gaussian.hpp"
#include "splatlab/image.hpp"
#include "splatlab/metrics.hpp"
#include "splatlab/optim.hpp"
#include "splatlab/renderer.hpp"

namespace {

using namespace splatlab;

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string protocol;  // "", "posed", "pose_free"
  std::string epa;       // "", "on", "off"
};

std::string lowercase_extension(const std::string& path) {
  const size_t dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

ImageBuffer read_image_any(const std::string& path) {
  const std::string ext = lowercase_extension(path);
  if (ext == "pfm") return read_pfm_file(path);
  if (ext == "ppm") return read_ppm_file(path);
  fail(ErrorKind::ParseError, "unsupported image extension (want .pfm or .ppm): " + path);
}

void write_image_any(const std::string& path, const ImageBuffer& image) {
  const std::string ext = lowercase_extension(path);
  if (ext == "pfm") return write_pfm_file(path, image);
  if (ext == "ppm") return write_ppm_file(path, image);
  fail(ErrorKind::ParseError, "unsupported image extension (want .pfm or .ppm): " + path);
}

std::vector<ImageBuffer> read_image_list(const ConfigMap& cfg, const std::string& key,
                                         bool required) {
  const std::vector<std::string> paths = config_get_string_list(cfg, key, {});
  if (paths.empty() && required) {
    fail(ErrorKind::InvalidConfig, "config key '" + key + "' must list at least one image");
  }
  std::vector<ImageBuffer> images;
  images.reserve(paths.size());
  for (const std::string& p : paths) images.push_back(read_image_any(p));
  return images;
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create directory: " + out_dir);
}

RenderConfig render_config_from(const ConfigMap& cfg) {
  RenderConfig rc;
  rc.near_plane = config_get_real(cfg, "render.near_plane", rc.near_plane);
  rc.dilation = config_get_real(cfg, "render.dilation", rc.dilation);
  rc.alpha_max = config_get_real(cfg, "render.alpha_max", rc.alpha_max);
  rc.alpha_cut = config_get_real(cfg, "render.alpha_cut", rc.alpha_cut);
  rc.t_min = config_get_real(cfg, "render.t_min", rc.t_min);
  rc.tile_size = static_cast<int>(config_get_int(cfg, "render.tile_size", rc.tile_size));
  rc.threads = static_cast<int>(config_get_int(cfg, "render.threads", rc.threads));
  return rc;
}

LossWeights weights_from(const ConfigMap& cfg) {
  LossWeights w;
  w.lambda_perc = config_get_real(cfg, "weights.lambda_perc", w.lambda_perc);
  w.lambda_R = config_get_real(cfg, "weights.lambda_R", w.lambda_R);
  w.lambda_t = config_get_real(cfg, "weights.lambda_t", w.lambda_t);
  w.lambda_K = config_get_real(cfg, "weights.lambda_K", w.lambda_K);
  w.huber_delta = config_get_real(cfg, "weights.huber_delta", w.huber_delta);
  return w;
}

Eigen::Vector3f background_from(const ConfigMap& cfg) {
  const std::vector<double> bg = config_get_real_list(cfg, "background", {0.0, 0.0, 0.0});
  if (bg.size() != 3) fail(ErrorKind::ParseError, "background needs 3 values");
  return {static_cast<float>(bg[0]), static_cast<float>(bg[1]), static_cast<float>(bg[2])};
}

// fit: run the appearance expert on posed context views and save the scene.
int cmd_fit(const CliOptions& opt) {
  const ConfigMap cfg = read_config_file(opt.config_path);
  const std::vector<ImageBuffer> images = read_image_list(cfg, "images", true);
  const std::vector<CameraPose> poses = read_pose_file(config_get(cfg, "poses", ""));

  std::vector<DepthMap> depths;
  for (const std::string& p : config_get_string_list(cfg, "depths", {})) {
    depths.push_back(read_depth_pfm_file(p));
  }

  AppearanceExpertSpec spec;
  spec.kind = AppearanceExpertKind::kFitting;
  spec.fitting.iterations =
      static_cast<int>(config_get_int(cfg, "iterations", spec.fitting.iterations));
  spec.fitting.lr = config_get_real(cfg, "lr", spec.fitting.lr);
  spec.fitting.constant_depth =
      config_get_real(cfg, "constant_depth", spec.fitting.constant_depth);
  spec.fitting.init.opacity_logit = static_cast<float>(
      config_get_real(cfg, "opacity_logit", spec.fitting.init.opacity_logit));
  spec.fitting.init.footprint_px = static_cast<float>(
      config_get_real(cfg, "footprint_px", spec.fitting.init.footprint_px));
  spec.fitting.background = background_from(cfg);
  spec.fitting.render = render_config_from(cfg);
  spec.fitting.weights = weights_from(cfg);

  const GaussianScene scene = generate_gaussians(spec, images, poses, depths);
  ensure_out_dir(opt.out_dir);
  write_gaussian_dump_file(opt.out_dir + "/scene.bin", scene);
  std::cout << "fit: " << scene.size() << " Gaussians from " << images.size()
            << " context views -> " << opt.out_dir << "/scene.bin\n";
  return 0;
}

// render: scene dump + pose file -> one image per pose.
int cmd_render(const CliOptions& opt) {
  const ConfigMap cfg = read_config_file(opt.config_path);
  GaussianScene scene = read_gaussian_dump_file(config_get(cfg, "scene", ""));
  scene.background_color = background_from(cfg);
  const std::vector<CameraPose> poses = read_pose_file(config_get(cfg, "poses", ""));
  const RenderConfig rc = render_config_from(cfg);
  const std::string format = config_get(cfg, "format", "pfm");
  if (format != "pfm" && format != "ppm") {
    fail(ErrorKind::InvalidConfig, "format must be pfm or ppm");
  }

  ensure_out_dir(opt.out_dir);
  for (size_t i = 0; i < poses.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "view_%03zu.%s", i, format.c_str());
    write_image_any(opt.out_dir + "/" + name, render(scene, poses[i], rc));
  }
  std::cout << "render: wrote " << poses.size() << " " << format << " images to "
            << opt.out_dir << "\n";
  return 0;
}

// epa: refine poses against target images over a frozen scene.
int cmd_epa(const CliOptions& opt) {
  const ConfigMap cfg = read_config_file(opt.config_path);
  GaussianScene scene = read_gaussian_dump_file(config_get(cfg, "scene", ""));
  scene.background_color = background_from(cfg);
  const std::vector<CameraPose> poses = read_pose_file(config_get(cfg, "poses", ""));
  const std::vector<ImageBuffer> targets = read_image_list(cfg, "images", true);

  EpaConfig ec;
  ec.iters = static_cast<int>(config_get_int(cfg, "iters", ec.iters));
  ec.lr = config_get_real(cfg, "lr", ec.lr);
  ec.optimize_intrinsics = config_get_bool(cfg, "intrinsics", ec.optimize_intrinsics);
  ec.include_perceptual = config_get_bool(cfg, "perceptual", ec.include_perceptual);
  ec.render = render_config_from(cfg);
  ec.weights = weights_from(cfg);

  const EpaResult result = align_poses_epa(scene, poses, targets, ec);
  ensure_out_dir(opt.out_dir);
  write_pose_file(opt.out_dir + "/poses_refined.txt", result.poses);
  {
    std::ofstream trace(opt.out_dir + "/trace.csv", std::ios::binary);
    if (!trace) fail(ErrorKind::IoError, "cannot write trace.csv");
    trace << trace_csv(result.trace);
  }
  std::printf("epa: loss %.6g -> %.6g (best at iteration %d of %d)\n", result.initial_loss,
              result.best_loss, result.best_iter, ec.iters);
  return 0;
}

// eval: metrics from image files and optional pose files.
int cmd_eval(const CliOptions& opt) {
  const ConfigMap cfg = read_config_file(opt.config_path);
  const std::vector<ImageBuffer> rendered = read_image_list(cfg, "rendered", true);
  const std::vector<ImageBuffer> targets = read_image_list(cfg, "targets", true);
  if (rendered.size() != targets.size()) {
    fail(ErrorKind::LengthMismatch, "rendered and target image counts differ");
  }

  MetricReport report;
  report.method = config_get(cfg, "method", "eval");
  report.context_views = static_cast<int>(config_get_int(cfg, "context_views", 0));
  for (size_t i = 0; i < rendered.size(); ++i) {
    report.per_view_psnr.push_back(psnr(rendered[i], targets[i]));
    report.per_view_ssim.push_back(ssim(rendered[i], targets[i]));
  }
  report.finalize_means();

  const std::string pred_path = config_get(cfg, "pred_poses", "");
  const std::string gt_path = config_get(cfg, "gt_poses", "");
  if (!pred_path.empty() && !gt_path.empty()) {
    const std::vector<CameraPose> pred = read_pose_file(pred_path);
    const std::vector<CameraPose> gt = read_pose_file(gt_path);
    const std::string basis = config_get(cfg, "auc_basis", "max");
    if (basis != "max" && basis != "rot") {
      fail(ErrorKind::InvalidConfig, "auc_basis must be max or rot");
    }
    report.auc_uses_max_error = basis == "max";
    report.auc_thresholds = config_get_real_list(cfg, "auc_thresholds", {5.0, 10.0, 20.0});
    std::vector<double> errors;
    for (const PoseErrorSample& e : pairwise_pose_errors(pred, gt)) {
      errors.push_back(report.auc_uses_max_error ? e.max_err_deg() : e.rot_err_deg);
    }
    report.auc_values = pose_auc(errors, report.auc_thresholds);
    report.pair_count = static_cast<int>(errors.size());
  }

  const std::vector<MetricReport> rows{report};
  std::cout << metric_table(rows);
  if (!opt.out_dir.empty()) {
    ensure_out_dir(opt.out_dir);
    std::ofstream csv(opt.out_dir + "/metrics.csv", std::ios::binary);
    if (!csv) fail(ErrorKind::IoError, "cannot write metrics.csv");
    csv << metric_csv(rows);
  }
  return 0;
}

// bench: full pipeline sweep over noise levels and view counts.
int cmd_bench(const CliOptions& opt) {
  ConfigMap map;
  if (!opt.config_path.empty()) map = read_config_file(opt.config_path);
  BenchConfig cfg = bench_config_from(map);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.epa == "on") cfg.run_epa = true;
  if (opt.epa == "off") cfg.run_epa = false;
  if (opt.protocol == "posed") {
    cfg.include_posed = true;
    cfg.rot_sigmas_deg.clear();
    cfg.rot_sigmas_deg.push_back(0.0);  // keep validation happy; rows below drop pose_free
  } else if (opt.protocol == "pose_free") {
    cfg.include_posed = false;
  }

  std::vector<MetricReport> rows = run_bench(cfg, opt.out_dir);
  if (opt.protocol == "posed") {
    std::vector<MetricReport> filtered;
    for (MetricReport& r : rows) {
      if (r.method == "posed") filtered.push_back(std::move(r));
    }
    rows = std::move(filtered);
  }
  std::cout << metric_table(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-expert pose-free Gaussian-splatting workbench"};
  app.require_subcommand(1);

  CliOptions opt;
  const auto add_common = [&](CLI::App* sub, bool config_required, bool out_required) {
    auto* c = sub->add_option("--config", opt.config_path, "key=value config file");
    if (config_required) c->required();
    auto* o = sub->add_option("--out-dir", opt.out_dir, "output directory");
    if (out_required) o->required();
    sub->add_option("--seed", opt.seed, "seed override");
    sub->add_option("--protocol", opt.protocol, "posed|pose_free")
        ->check(CLI::IsMember({"posed", "pose_free"}));
    sub->add_option("--epa", opt.epa, "on|off (EPA rows get a +epa suffix)")
        ->check(CLI::IsMember({"on", "off"}));
  };

  CLI::App* fit = app.add_subcommand("fit", "appearance-expert fitting");
  add_common(fit, true, true);
  CLI::App* rend = app.add_subcommand("render", "render a scene from poses");
  add_common(rend, true, true);
  CLI::App* epa = app.add_subcommand("epa", "evaluation-time pose alignment");
  add_common(epa, true, true);
  CLI::App* eval = app.add_subcommand("eval", "metrics from image/pose files");
  add_common(eval, true, false);
  CLI::App* bench = app.add_subcommand("bench", "pipeline sweep over noise and view counts");
  add_common(bench, false, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(fit)) return cmd_fit(opt);
    if (app.got_subcommand(rend)) return cmd_render(opt);
    if (app.got_subcommand(epa)) return cmd_epa(opt);
    if (app.got_subcommand(eval)) return cmd_eval(opt);
    if (app.got_subcommand(bench)) return cmd_bench(opt);
  } catch (const splatlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == splatlab::ErrorKind::IoError ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
