#include "splatlab/bench.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <utility>

#include "splatlab/error.hpp"
#include "splatlab/rng.hpp"

namespace splatlab {

namespace {

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot open for writing: " + path);
  out << content;
  out.flush();
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

}  // namespace

// ---------------------------------------------------------------------------
// View selection.
// ---------------------------------------------------------------------------

std::vector<int> farthest_point_sample(const std::vector<Eigen::Vector3d>& centers, int k,
                                       bool random_start, std::uint64_t seed) {
  const int n = static_cast<int>(centers.size());
  if (k < 1 || k > n) {
    fail(ErrorKind::BadK, "k = " + std::to_string(k) + " outside [1, " + std::to_string(n) +
                              "]");
  }
  for (const Eigen::Vector3d& c : centers) {
    if (!c.allFinite()) fail(ErrorKind::NonFiniteValue, "point coordinates must be finite");
  }

  std::vector<int> picks;
  picks.reserve(k);
  std::vector<bool> picked(n, false);
  // Squared min-distance to the selected set; ties in the squared distance
  // are exactly ties in the Euclidean distance.
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());

  int first = 0;
  if (random_start) first = static_cast<int>(Rng(seed).integer(static_cast<std::uint64_t>(n)));

  int current = first;
  while (true) {
    picks.push_back(current);
    picked[current] = true;
    if (static_cast<int>(picks.size()) == k) break;
    for (int i = 0; i < n; ++i) {
      if (picked[i]) continue;
      const double d2 = (centers[i] - centers[current]).squaredNorm();
      if (d2 < min_d2[i]) min_d2[i] = d2;
    }
    int best = -1;
    double best_d2 = -1.0;
    for (int i = 0; i < n; ++i) {
      if (picked[i]) continue;
      if (min_d2[i] > best_d2) {  // strict '>' keeps the lowest index on ties
        best_d2 = min_d2[i];
        best = i;
      }
    }
    current = best;
  }
  return picks;
}

void SelectionProtocol::validate() const {
  if (n_context < 1) fail(ErrorKind::InvalidConfig, "need at least one context view");
  if (n_target < 0) fail(ErrorKind::InvalidConfig, "target count must be >= 0");
  if (max_interval < 0) fail(ErrorKind::InvalidConfig, "max frame interval must be >= 0");
}

Eigen::Vector3d camera_center(const CameraPose& pose) {
  return -pose.rotation.transpose() * pose.translation;
}

ViewSelection select_views(const std::vector<CameraPose>& frames,
                           const SelectionProtocol& protocol) {
  protocol.validate();
  const int n = static_cast<int>(frames.size());
  if (n == 0) fail(ErrorKind::InsufficientFrames, "no frames to select from");

  const int window = std::min(protocol.max_interval + 1, n);
  const bool fixed = protocol.target_mode == TargetMode::kFixedIndex;
  const int wanted_targets =
      fixed ? static_cast<int>(protocol.fixed_targets.size()) : protocol.n_target;
  const int needed_in_window = protocol.n_context + (fixed ? 0 : wanted_targets);
  if (needed_in_window > window) {
    fail(ErrorKind::InsufficientFrames,
         std::to_string(protocol.n_context) + " context + " +
             std::to_string(fixed ? 0 : wanted_targets) + " target views do not fit a " +
             std::to_string(window) + "-frame window");
  }

  Rng rng(protocol.seed);
  const int start =
      n == window ? 0 : static_cast<int>(rng.integer(static_cast<std::uint64_t>(n - window + 1)));

  std::vector<Eigen::Vector3d> centers;
  centers.reserve(window);
  for (int i = 0; i < window; ++i) centers.push_back(camera_center(frames[start + i]));

  ViewSelection sel;
  sel.window_start = start;
  sel.window_length = window;
  for (int rel : farthest_point_sample(centers, protocol.n_context)) {
    sel.context_indices.push_back(start + rel);
  }
  std::sort(sel.context_indices.begin(), sel.context_indices.end());

  if (fixed) {
    std::vector<int> targets = protocol.fixed_targets;
    std::sort(targets.begin(), targets.end());
    for (size_t i = 0; i < targets.size(); ++i) {
      const int t = targets[i];
      if (t < 0 || t >= n) fail(ErrorKind::InvalidConfig, "fixed target index out of range");
      if (i > 0 && targets[i - 1] == t) {
        fail(ErrorKind::InvalidConfig, "duplicate fixed target index");
      }
      if (std::binary_search(sel.context_indices.begin(), sel.context_indices.end(), t)) {
        fail(ErrorKind::InvalidConfig, "fixed target collides with a context view");
      }
    }
    sel.target_indices = std::move(targets);
  } else {
    std::vector<int> remaining;
    for (int i = start; i < start + window; ++i) {
      if (!std::binary_search(sel.context_indices.begin(), sel.context_indices.end(), i)) {
        remaining.push_back(i);
      }
    }
    for (int t = 0; t < wanted_targets; ++t) {
      const size_t pick = rng.integer(remaining.size());
      sel.target_indices.push_back(remaining[pick]);
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    std::sort(sel.target_indices.begin(), sel.target_indices.end());
  }
  return sel;
}

// ---------------------------------------------------------------------------
// Synthetic oracle scene.
// ---------------------------------------------------------------------------

void SyntheticSceneSpec::validate() const {
  if (gaussian_count < 1 || camera_count < 1) {
    fail(ErrorKind::InvalidConfig, "synthetic counts must be >= 1");
  }
  if (!(orbit_radius > 0.0) || !std::isfinite(orbit_radius)) {
    fail(ErrorKind::InvalidConfig, "orbit radius must be positive and finite");
  }
  if (image_width < 1 || image_height < 1) {
    fail(ErrorKind::InvalidConfig, "image size must be >= 1");
  }
  if (!background.allFinite()) fail(ErrorKind::NonFiniteValue, "background must be finite");
}

CameraPose orbit_camera(int index, int count, double radius, int width, int height) {
  const double theta = 2.0 * M_PI * static_cast<double>(index) / static_cast<double>(count);
  const double phi = 0.3 * std::sin(theta);
  const Eigen::Vector3d center =
      radius * Eigen::Vector3d(std::cos(phi) * std::cos(theta), std::sin(phi),
                               std::cos(phi) * std::sin(theta));

  const Eigen::Vector3d forward = (-center).normalized();  // toward the origin
  Eigen::Vector3d up_hint(0.0, -1.0, 0.0);                  // world up; image y points down
  Eigen::Vector3d right = up_hint.cross(forward);
  if (right.norm() < 1e-9) {
    up_hint = Eigen::Vector3d(1.0, 0.0, 0.0);
    right = up_hint.cross(forward);
  }
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);

  CameraPose pose;
  pose.rotation.row(0) = right;
  pose.rotation.row(1) = down;
  pose.rotation.row(2) = forward;
  pose.translation = -pose.rotation * center;
  // Focal so the unit ball spans most of the smaller image dimension
  // (half-extent 1.15 world units at the orbit distance).
  const double focal = 0.5 * static_cast<double>(std::min(width, height)) * radius / 1.15;
  pose.intrinsics.fx = focal;
  pose.intrinsics.fy = focal;
  pose.intrinsics.cx = 0.5 * width;
  pose.intrinsics.cy = 0.5 * height;
  pose.intrinsics.width = width;
  pose.intrinsics.height = height;
  pose.validate();
  return pose;
}

DepthMap composite_splat_depth(const GaussianScene& scene, const CameraPose& pose,
                               const RenderConfig& cfg, double fallback_depth) {
  cfg.validate();
  pose.validate();
  if (scene.gaussians.empty()) fail(ErrorKind::EmptyScene, "no Gaussians to composite");

  struct Splat {
    Eigen::Vector2d mean;
    Eigen::Matrix2d conic;
    double depth;
    double opacity;
  };
  std::vector<Splat> splats;
  splats.reserve(scene.gaussians.size());
  for (const Gaussian& g : scene.gaussians) {
    const auto proj = project_gaussian(g, pose, cfg);
    if (!proj) continue;
    const double det = proj->cov2d.determinant();
    Eigen::Matrix2d conic;
    conic << proj->cov2d(1, 1), -proj->cov2d(0, 1), -proj->cov2d(1, 0), proj->cov2d(0, 0);
    conic /= det;
    splats.push_back({proj->mean2d, conic, proj->depth, proj->opacity});
  }
  std::stable_sort(splats.begin(), splats.end(),
                   [](const Splat& a, const Splat& b) { return a.depth < b.depth; });

  double fallback = fallback_depth;
  if (fallback < 0.0) {
    fallback = pose.translation.norm();  // distance from the camera center to the origin
    if (!(fallback > cfg.near_plane)) fallback = 1.0;
  }

  const int w = pose.intrinsics.width;
  const int h = pose.intrinsics.height;
  DepthMap out(w, h, fallback);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector2d px(x + 0.5, y + 0.5);
      double acc_depth = 0.0;
      double acc_weight = 0.0;
      double transmittance = 1.0;
      for (const Splat& s : splats) {
        const Eigen::Vector2d d = px - s.mean;
        const double rho = d.dot(s.conic * d);
        const double alpha = std::min(cfg.alpha_max, s.opacity * std::exp(-0.5 * rho));
        if (alpha < cfg.alpha_cut) continue;
        acc_depth += alpha * transmittance * s.depth;
        acc_weight += alpha * transmittance;
        transmittance *= 1.0 - alpha;
        if (transmittance < cfg.t_min) break;
      }
      if (acc_weight > 1e-6) out.at(y, x) = acc_depth / acc_weight;
    }
  }
  return out;
}

SyntheticScene make_synthetic_scene(const SyntheticSceneSpec& spec, const RenderConfig& render) {
  spec.validate();
  render.validate();

  SyntheticScene out;
  out.scene.background_color = spec.background;
  Rng rng(spec.seed);
  out.scene.gaussians.reserve(spec.gaussian_count);
  for (int i = 0; i < spec.gaussian_count; ++i) {
    Gaussian g;
    const Eigen::Vector3d direction = rng.unit_vector();
    const double radius = std::cbrt(rng.uniform());
    g.mean = (radius * direction).cast<float>();
    for (int j = 0; j < 3; ++j) {
      g.log_scale[j] = static_cast<float>(std::log(0.04 + 0.12 * rng.uniform()));
    }
    g.rotation_q = rng.unit_quaternion().cast<float>();
    g.opacity_logit = static_cast<float>(-1.0 + 3.5 * rng.uniform());
    for (int c = 0; c < 3; ++c) {
      g.color[c] = static_cast<float>(0.05 + 0.9 * rng.uniform());
    }
    out.scene.gaussians.push_back(g);
    out.scene.source_view.push_back(-1);
  }

  out.cameras.reserve(spec.camera_count);
  out.images.reserve(spec.camera_count);
  out.depths.reserve(spec.camera_count);
  for (int i = 0; i < spec.camera_count; ++i) {
    CameraPose cam = orbit_camera(i, spec.camera_count, spec.orbit_radius, spec.image_width,
                                  spec.image_height);
    out.images.push_back(render_reference(out.scene, cam, render));
    out.depths.push_back(composite_splat_depth(out.scene, cam, render));
    out.scene_scale = std::max(out.scene_scale, cam.translation.norm());
    out.cameras.push_back(std::move(cam));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark sweep.
// ---------------------------------------------------------------------------

void BenchConfig::validate() const {
  scene.validate();
  render.validate();
  weights.validate();
  epa.validate();
  if (rot_sigmas_deg.empty() || context_counts.empty()) {
    fail(ErrorKind::InvalidConfig, "sweep lists must be non-empty");
  }
  for (double s : rot_sigmas_deg) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      fail(ErrorKind::InvalidConfig, "rotation sigmas must be finite and >= 0");
    }
  }
  for (int c : context_counts) {
    if (c < 1) fail(ErrorKind::InvalidConfig, "context counts must be >= 1");
  }
  if (!(trans_rel_sigma >= 0.0) || !(intr_rel_sigma >= 0.0)) {
    fail(ErrorKind::InvalidConfig, "noise sigmas must be >= 0");
  }
  if (n_target < 1) fail(ErrorKind::InvalidConfig, "bench needs at least one target view");
  if (max_interval < 1) fail(ErrorKind::InvalidConfig, "max interval must be >= 1");
  if (fit_iterations < 0) fail(ErrorKind::InvalidConfig, "fit iterations must be >= 0");
  if (!(fit_lr > 0.0)) fail(ErrorKind::InvalidConfig, "fit lr must be positive");
  if (auc_thresholds_deg.empty()) {
    fail(ErrorKind::InvalidConfig, "need at least one AUC threshold");
  }
}

BenchConfig bench_config_from(const ConfigMap& m) {
  BenchConfig cfg;
  cfg.scene.seed = static_cast<std::uint64_t>(config_get_int(m, "scene_seed", 7));
  cfg.scene.gaussian_count =
      static_cast<int>(config_get_int(m, "gaussians", cfg.scene.gaussian_count));
  cfg.scene.camera_count =
      static_cast<int>(config_get_int(m, "cameras", cfg.scene.camera_count));
  cfg.scene.orbit_radius = config_get_real(m, "orbit_radius", cfg.scene.orbit_radius);
  cfg.scene.image_width = static_cast<int>(config_get_int(m, "width", cfg.scene.image_width));
  cfg.scene.image_height =
      static_cast<int>(config_get_int(m, "height", cfg.scene.image_height));
  {
    const std::vector<double> bg = config_get_real_list(m, "background", {0.0, 0.0, 0.0});
    if (bg.size() != 3) fail(ErrorKind::ParseError, "background needs 3 values");
    cfg.scene.background = Eigen::Vector3f(static_cast<float>(bg[0]),
                                           static_cast<float>(bg[1]),
                                           static_cast<float>(bg[2]));
  }
  cfg.render.tile_size = static_cast<int>(config_get_int(m, "tile_size", cfg.render.tile_size));
  cfg.render.threads = static_cast<int>(config_get_int(m, "threads", cfg.render.threads));

  cfg.rot_sigmas_deg = config_get_real_list(m, "rot_sigmas", cfg.rot_sigmas_deg);
  {
    std::vector<long> counts =
        config_get_int_list(m, "context_counts",
                            std::vector<long>(cfg.context_counts.begin(),
                                              cfg.context_counts.end()));
    cfg.context_counts.assign(counts.begin(), counts.end());
  }
  cfg.trans_rel_sigma = config_get_real(m, "trans_sigma", cfg.trans_rel_sigma);
  cfg.intr_rel_sigma = config_get_real(m, "intr_sigma", cfg.intr_rel_sigma);
  cfg.n_target = static_cast<int>(config_get_int(m, "targets", cfg.n_target));
  cfg.max_interval = static_cast<int>(config_get_int(m, "interval", cfg.max_interval));
  cfg.seed = static_cast<std::uint64_t>(config_get_int(m, "seed", 1));
  cfg.fit_iterations = static_cast<int>(config_get_int(m, "fit_iterations", cfg.fit_iterations));
  cfg.fit_lr = config_get_real(m, "fit_lr", cfg.fit_lr);
  cfg.init_opacity_logit =
      static_cast<float>(config_get_real(m, "init_opacity_logit", cfg.init_opacity_logit));
  cfg.include_posed = config_get_bool(m, "posed", cfg.include_posed);
  cfg.run_epa = config_get_bool(m, "epa", cfg.run_epa);
  cfg.epa.iters = static_cast<int>(config_get_int(m, "epa_iters", cfg.epa.iters));
  cfg.epa.lr = config_get_real(m, "epa_lr", cfg.epa.lr);
  cfg.epa.optimize_intrinsics =
      config_get_bool(m, "epa_intrinsics", cfg.epa.optimize_intrinsics);
  cfg.epa.render = cfg.render;
  cfg.epa.weights = cfg.weights;
  cfg.auc_thresholds_deg = config_get_real_list(m, "auc_thresholds", cfg.auc_thresholds_deg);
  return cfg;
}

ConfigMap bench_config_to_map(const BenchConfig& cfg) {
  ConfigMap m;
  m["scene_seed"] = std::to_string(cfg.scene.seed);
  m["gaussians"] = std::to_string(cfg.scene.gaussian_count);
  m["cameras"] = std::to_string(cfg.scene.camera_count);
  m["orbit_radius"] = format_g17(cfg.scene.orbit_radius);
  m["width"] = std::to_string(cfg.scene.image_width);
  m["height"] = std::to_string(cfg.scene.image_height);
  m["background"] = format_g17(cfg.scene.background[0]) + "," +
                    format_g17(cfg.scene.background[1]) + "," +
                    format_g17(cfg.scene.background[2]);
  m["tile_size"] = std::to_string(cfg.render.tile_size);
  m["threads"] = std::to_string(cfg.render.threads);
  {
    std::string s;
    for (size_t i = 0; i < cfg.rot_sigmas_deg.size(); ++i) {
      if (i) s += ",";
      s += format_g17(cfg.rot_sigmas_deg[i]);
    }
    m["rot_sigmas"] = s;
  }
  {
    std::string s;
    for (size_t i = 0; i < cfg.context_counts.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(cfg.context_counts[i]);
    }
    m["context_counts"] = s;
  }
  m["trans_sigma"] = format_g17(cfg.trans_rel_sigma);
  m["intr_sigma"] = format_g17(cfg.intr_rel_sigma);
  m["targets"] = std::to_string(cfg.n_target);
  m["interval"] = std::to_string(cfg.max_interval);
  m["seed"] = std::to_string(cfg.seed);
  m["fit_iterations"] = std::to_string(cfg.fit_iterations);
  m["fit_lr"] = format_g17(cfg.fit_lr);
  m["init_opacity_logit"] = format_g17(cfg.init_opacity_logit);
  m["posed"] = cfg.include_posed ? "on" : "off";
  m["epa"] = cfg.run_epa ? "on" : "off";
  m["epa_iters"] = std::to_string(cfg.epa.iters);
  m["epa_lr"] = format_g17(cfg.epa.lr);
  m["epa_intrinsics"] = cfg.epa.optimize_intrinsics ? "on" : "off";
  {
    std::string s;
    for (size_t i = 0; i < cfg.auc_thresholds_deg.size(); ++i) {
      if (i) s += ",";
      s += format_g17(cfg.auc_thresholds_deg[i]);
    }
    m["auc_thresholds"] = s;
  }
  return m;
}

namespace {

// One evaluated pipeline run: renders each target view, scores it against the
// oracle image, and computes the pose AUC over all selected views.
MetricReport evaluate_run(const std::string& method, int n_context,
                          const std::vector<CameraPose>& pred_poses,
                          const GaussianScene& scene,
                          const std::vector<ImageBuffer>& target_images,
                          const std::vector<int>& target_frames,
                          const std::vector<CameraPose>& gt_poses, const BenchConfig& cfg,
                          const std::string& out_dir) {
  MetricReport r;
  r.method = method;
  r.context_views = n_context;
  for (size_t t = 0; t < target_images.size(); ++t) {
    const CameraPose& pose = pred_poses[n_context + t];
    const ImageBuffer rendered = render(scene, pose, cfg.render);
    r.per_view_psnr.push_back(psnr(rendered, target_images[t]));
    r.per_view_ssim.push_back(ssim(rendered, target_images[t]));
    if (!out_dir.empty()) {
      char name[128];
      std::snprintf(name, sizeof(name), "%s_c%d_view%03d.pfm", method.c_str(), n_context,
                    target_frames[t]);
      write_pfm_file(out_dir + "/" + name, rendered);
    }
  }
  const std::vector<PoseErrorSample> errors = pairwise_pose_errors(pred_poses, gt_poses);
  std::vector<double> error_values;
  error_values.reserve(errors.size());
  for (const PoseErrorSample& e : errors) error_values.push_back(e.max_err_deg());
  r.auc_thresholds = cfg.auc_thresholds_deg;
  r.auc_values = pose_auc(error_values, cfg.auc_thresholds_deg);
  r.auc_uses_max_error = true;
  r.pair_count = static_cast<int>(errors.size());
  r.finalize_means();
  return r;
}

}  // namespace

std::vector<MetricReport> run_bench(const BenchConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorKind::IoError, "cannot create directory: " + out_dir);
  }

  const SyntheticScene synth = make_synthetic_scene(cfg.scene, cfg.render);

  AppearanceExpertSpec app;
  app.kind = AppearanceExpertKind::kFitting;
  app.fitting.iterations = cfg.fit_iterations;
  app.fitting.lr = cfg.fit_lr;
  app.fitting.init.opacity_logit = cfg.init_opacity_logit;
  app.fitting.background = cfg.scene.background;
  app.fitting.render = cfg.render;
  app.fitting.weights = cfg.weights;

  std::vector<MetricReport> reports;
  std::uint64_t run_index = 0;
  for (int n_ctx : cfg.context_counts) {
    SelectionProtocol protocol;
    protocol.n_context = n_ctx;
    protocol.n_target = cfg.n_target;
    protocol.max_interval = cfg.max_interval;
    protocol.seed = cfg.seed;
    const ViewSelection sel = select_views(synth.cameras, protocol);

    std::vector<int> frame_order = sel.context_indices;
    frame_order.insert(frame_order.end(), sel.target_indices.begin(),
                       sel.target_indices.end());
    std::vector<ImageBuffer> images;
    std::vector<CameraPose> gt;
    for (int f : frame_order) {
      images.push_back(synth.images[f]);
      gt.push_back(synth.cameras[f]);
    }
    std::vector<DepthMap> depths;
    for (int f : sel.context_indices) depths.push_back(synth.depths[f]);
    std::vector<ImageBuffer> target_images;
    for (int f : sel.target_indices) target_images.push_back(synth.images[f]);

    const auto record_run = [&](const std::string& method, const PipelineResult& result) {
      reports.push_back(evaluate_run(method, n_ctx, result.poses, result.scene, target_images,
                                     sel.target_indices, gt, cfg, out_dir));
      if (!out_dir.empty()) {
        write_text_file(out_dir + "/provenance_" + method + "_c" + std::to_string(n_ctx) +
                            ".txt",
                        result.provenance);
      }
    };

    if (cfg.include_posed) {
      GeometryExpertSpec bypass;  // unused by the posed protocol
      record_run("posed",
                 run_pipeline(bypass, app, images, n_ctx, Protocol::kPosed, gt, depths));
    }

    for (double sigma : cfg.rot_sigmas_deg) {
      GeometryExpertSpec geo;
      geo.kind = GeometryExpertKind::kNoisyOracle;
      geo.noise.rot_deg_sigma = sigma;
      geo.noise.trans_rel_sigma = cfg.trans_rel_sigma;
      geo.noise.intr_rel_sigma = cfg.intr_rel_sigma;
      geo.noise.seed = cfg.seed * 1000003ull + run_index;
      ++run_index;

      const PipelineResult result =
          run_pipeline(geo, app, images, n_ctx, Protocol::kPoseFree, gt, depths);
      const std::string method = "pose_free_rot" + format_g(sigma);
      record_run(method, result);

      if (cfg.run_epa) {
        std::vector<CameraPose> target_poses(result.poses.begin() + n_ctx,
                                             result.poses.end());
        const EpaResult aligned =
            align_poses_epa(result.scene, target_poses, target_images, cfg.epa);
        PipelineResult refined = result;
        for (size_t t = 0; t < aligned.poses.size(); ++t) {
          refined.poses[n_ctx + static_cast<int>(t)] = aligned.poses[t];
        }
        reports.push_back(evaluate_run(method + "+epa", n_ctx, refined.poses, refined.scene,
                                       target_images, sel.target_indices, gt, cfg, out_dir));
      }
    }
  }

  if (!out_dir.empty()) {
    write_text_file(out_dir + "/results.csv", metric_csv(reports));
    write_text_file(out_dir + "/results.txt", metric_table(reports));
    write_text_file(out_dir + "/bench_config.txt", config_to_text(bench_config_to_map(cfg)));
  }
  return reports;
}

}  // namespace splatlab
