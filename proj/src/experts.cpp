#include "splatlab/experts.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "splatlab/config.hpp"
#include "splatlab/error.hpp"
#include "splatlab/rng.hpp"
#include "splatlab/so3.hpp"

namespace splatlab {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& value, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 16);
  if (errno != 0 || end == value.c_str() || *end != '\0') {
    fail(ErrorKind::ParseError, "key '" + key + "': not a hex hash: '" + value + "'");
  }
  return static_cast<std::uint64_t>(v);
}

std::string require(const ConfigMap& map, const std::string& key) {
  const auto it = map.find(key);
  if (it == map.end()) fail(ErrorKind::ParseError, "provenance missing key '" + key + "'");
  return it->second;
}

double scene_scale_of(const std::vector<CameraPose>& poses) {
  double scale = 0.0;
  for (const CameraPose& p : poses) scale = std::max(scale, p.translation.norm());
  return scale;
}

}  // namespace

void NoiseSpec::validate() const {
  const bool ok = std::isfinite(rot_deg_sigma) && rot_deg_sigma >= 0.0 &&
                  std::isfinite(trans_rel_sigma) && trans_rel_sigma >= 0.0 &&
                  std::isfinite(intr_rel_sigma) && intr_rel_sigma >= 0.0;
  if (!ok) fail(ErrorKind::InvalidConfig, "noise sigmas must be finite and >= 0");
}

void FittingConfig::validate() const {
  if (iterations < 0) fail(ErrorKind::InvalidConfig, "fitting iterations must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    fail(ErrorKind::InvalidConfig, "fitting lr must be positive and finite");
  }
  if (!(constant_depth > 0.0) || !std::isfinite(constant_depth)) {
    fail(ErrorKind::InvalidConfig, "constant depth prior must be positive and finite");
  }
  render.validate();
  weights.validate();
}

std::vector<CameraPose> estimate_poses(const GeometryExpertSpec& spec,
                                       const std::vector<ImageBuffer>& images,
                                       const std::vector<CameraPose>& gt_poses) {
  if (spec.kind == GeometryExpertKind::kFileBacked) {
    std::vector<CameraPose> poses = read_pose_file(spec.path);
    if (!images.empty() && images.size() != poses.size()) {
      fail(ErrorKind::ShapeMismatch, "pose file holds " + std::to_string(poses.size()) +
                                         " poses for " + std::to_string(images.size()) +
                                         " images");
    }
    return poses;
  }

  spec.noise.validate();
  if (gt_poses.empty()) {
    fail(ErrorKind::MissingOracle, "noisy oracle needs ground-truth poses");
  }
  if (!images.empty() && images.size() != gt_poses.size()) {
    fail(ErrorKind::ShapeMismatch, "got " + std::to_string(gt_poses.size()) + " poses for " +
                                       std::to_string(images.size()) + " images");
  }

  const NoiseSpec& noise = spec.noise;
  const double scene_scale = scene_scale_of(gt_poses);
  Rng rng(noise.seed);

  std::vector<CameraPose> out;
  out.reserve(gt_poses.size());
  for (const CameraPose& gt : gt_poses) {
    CameraPose p = gt;
    // Fixed per-camera draw order; see the header. All draws happen even for
    // zero sigmas so the stream stays aligned, but zero-sigma perturbations
    // are skipped outright so the output stays bit-identical to the input.
    const Eigen::Vector3d axis = rng.unit_vector();
    const double angle_deg = noise.rot_deg_sigma * std::abs(rng.normal());
    const Eigen::Vector3d tn(rng.normal(), rng.normal(), rng.normal());
    const double focal_draw = rng.normal();

    if (noise.rot_deg_sigma > 0.0) {
      p.rotation = exp_so3(angle_deg * kDegToRad * axis) * p.rotation;
    }
    if (noise.trans_rel_sigma > 0.0) {
      p.translation += noise.trans_rel_sigma * scene_scale * tn;
    }
    if (noise.intr_rel_sigma > 0.0) {
      const double factor = 1.0 + noise.intr_rel_sigma * focal_draw;
      p.intrinsics.fx *= factor;
      p.intrinsics.fy *= factor;
    }
    out.push_back(p);
  }
  return out;
}

GaussianScene generate_gaussians(const AppearanceExpertSpec& spec,
                                 const std::vector<ImageBuffer>& context_images,
                                 const std::vector<CameraPose>& context_poses,
                                 const std::vector<DepthMap>& depth_priors) {
  if (context_images.size() != context_poses.size()) {
    fail(ErrorKind::ShapeMismatch, "got " + std::to_string(context_poses.size()) +
                                       " poses for " + std::to_string(context_images.size()) +
                                       " context images");
  }

  if (spec.kind == AppearanceExpertKind::kFileBacked) {
    return read_gaussian_dump_file(spec.path);
  }

  const FittingConfig& cfg = spec.fitting;
  cfg.validate();
  if (context_images.empty()) {
    fail(ErrorKind::EmptyInput, "fitting expert needs at least one context view");
  }
  if (!depth_priors.empty() && depth_priors.size() != context_images.size()) {
    fail(ErrorKind::ShapeMismatch, "got " + std::to_string(depth_priors.size()) +
                                       " depth maps for " +
                                       std::to_string(context_images.size()) + " context images");
  }

  GaussianScene merged;
  merged.background_color = cfg.background;
  for (size_t v = 0; v < context_images.size(); ++v) {
    InitConfig init = cfg.init;
    init.source_view = static_cast<int>(v);
    const DepthMap* depth = nullptr;
    DepthMap constant;
    if (depth_priors.empty()) {
      constant = DepthMap(context_images[v].width, context_images[v].height,
                          cfg.constant_depth);
      depth = &constant;
    } else {
      depth = &depth_priors[v];
    }
    GaussianScene part = unproject_pixel_aligned(*depth, context_images[v],
                                                 context_poses[v], init);
    merged.gaussians.insert(merged.gaussians.end(), part.gaussians.begin(),
                            part.gaussians.end());
    merged.source_view.insert(merged.source_view.end(), part.source_view.begin(),
                              part.source_view.end());
  }

  if (cfg.iterations == 0) return merged;

  JointConfig jc;
  jc.iters = cfg.iterations;
  jc.lr_scene = cfg.lr;
  jc.freeze_poses = true;
  jc.render = cfg.render;
  // All context views are render targets of the refinement; no pose
  // supervision is used, so gt_poses stays empty.
  JointResult result = joint_optimize(context_images, 0, context_poses, {}, merged,
                                      cfg.weights, jc);
  return std::move(result.scene);
}

std::string protocol_name(Protocol protocol) {
  return protocol == Protocol::kPosed ? "posed" : "pose_free";
}

Protocol protocol_from_name(const std::string& name) {
  if (name == "posed") return Protocol::kPosed;
  if (name == "pose_free") return Protocol::kPoseFree;
  fail(ErrorKind::InvalidConfig, "unknown protocol '" + name + "'");
}

std::uint64_t hash_images(const std::vector<ImageBuffer>& images) {
  std::uint64_t h = 14695981039346656037ull;
  for (const ImageBuffer& img : images) {
    h = fnv1a64(&img.width, sizeof(img.width), h);
    h = fnv1a64(&img.height, sizeof(img.height), h);
    h = fnv1a64(img.rgb.data(), img.rgb.size() * sizeof(double), h);
  }
  return h;
}

std::uint64_t hash_depths(const std::vector<DepthMap>& depths) {
  std::uint64_t h = 14695981039346656037ull;
  for (const DepthMap& d : depths) {
    h = fnv1a64(&d.width, sizeof(d.width), h);
    h = fnv1a64(&d.height, sizeof(d.height), h);
    h = fnv1a64(d.values.data(), d.values.size() * sizeof(double), h);
  }
  return h;
}

std::uint64_t hash_poses(const std::vector<CameraPose>& poses) {
  std::ostringstream text;
  write_pose_text(text, poses);
  const std::string s = text.str();
  return fnv1a64(s.data(), s.size());
}

namespace {

std::string build_provenance(const GeometryExpertSpec& geo, const AppearanceExpertSpec& app,
                             int n_context, Protocol protocol,
                             const std::vector<ImageBuffer>& images,
                             const std::vector<CameraPose>& gt_poses,
                             const std::vector<DepthMap>& depth_priors) {
  ConfigMap m;
  m["protocol"] = protocol_name(protocol);
  m["n_context"] = std::to_string(n_context);

  m["geometry.kind"] =
      geo.kind == GeometryExpertKind::kNoisyOracle ? "noisy_oracle" : "file_backed";
  m["geometry.rot_deg_sigma"] = format_g17(geo.noise.rot_deg_sigma);
  m["geometry.trans_rel_sigma"] = format_g17(geo.noise.trans_rel_sigma);
  m["geometry.intr_rel_sigma"] = format_g17(geo.noise.intr_rel_sigma);
  m["geometry.seed"] = std::to_string(geo.noise.seed);
  m["geometry.path"] = geo.path;

  m["appearance.kind"] =
      app.kind == AppearanceExpertKind::kFitting ? "fitting" : "file_backed";
  const FittingConfig& f = app.fitting;
  m["appearance.iterations"] = std::to_string(f.iterations);
  m["appearance.lr"] = format_g17(f.lr);
  m["appearance.constant_depth"] = format_g17(f.constant_depth);
  m["appearance.opacity_logit"] = format_g17(f.init.opacity_logit);
  m["appearance.footprint_px"] = format_g17(f.init.footprint_px);
  m["appearance.background"] = format_g17(f.background[0]) + "," +
                               format_g17(f.background[1]) + "," +
                               format_g17(f.background[2]);
  m["appearance.render.near_plane"] = format_g17(f.render.near_plane);
  m["appearance.render.dilation"] = format_g17(f.render.dilation);
  m["appearance.render.alpha_max"] = format_g17(f.render.alpha_max);
  m["appearance.render.alpha_cut"] = format_g17(f.render.alpha_cut);
  m["appearance.render.t_min"] = format_g17(f.render.t_min);
  m["appearance.render.tile_size"] = std::to_string(f.render.tile_size);
  m["appearance.weights.lambda_perc"] = format_g17(f.weights.lambda_perc);
  m["appearance.weights.lambda_R"] = format_g17(f.weights.lambda_R);
  m["appearance.weights.lambda_t"] = format_g17(f.weights.lambda_t);
  m["appearance.weights.lambda_K"] = format_g17(f.weights.lambda_K);
  m["appearance.weights.huber_delta"] = format_g17(f.weights.huber_delta);
  m["appearance.path"] = app.path;

  m["hash.images"] = format_hex64(hash_images(images));
  m["hash.gt_poses"] = format_hex64(hash_poses(gt_poses));
  m["hash.depths"] = format_hex64(hash_depths(depth_priors));
  return config_to_text(m);
}

}  // namespace

PipelineResult run_pipeline(const GeometryExpertSpec& geo, const AppearanceExpertSpec& app,
                            const std::vector<ImageBuffer>& images, int n_context,
                            Protocol protocol, const std::vector<CameraPose>& gt_poses,
                            const std::vector<DepthMap>& depth_priors) {
  if (images.empty()) fail(ErrorKind::EmptyInput, "pipeline needs at least one image");
  const int n = static_cast<int>(images.size());
  if (n_context < 1 || n_context > n) {
    fail(ErrorKind::InvalidConfig, "n_context must lie in [1, view count]");
  }

  PipelineResult result;
  if (protocol == Protocol::kPosed) {
    if (gt_poses.empty()) {
      fail(ErrorKind::MissingOracle, "posed protocol needs ground-truth poses");
    }
    if (static_cast<int>(gt_poses.size()) != n) {
      fail(ErrorKind::LengthMismatch, "got " + std::to_string(gt_poses.size()) +
                                          " poses for " + std::to_string(n) + " images");
    }
    result.poses = gt_poses;  // geometry expert bypassed
  } else {
    result.poses = estimate_poses(geo, images, gt_poses);
  }

  const std::vector<ImageBuffer> context_images(images.begin(), images.begin() + n_context);
  const std::vector<CameraPose> context_poses(result.poses.begin(),
                                              result.poses.begin() + n_context);
  result.scene = generate_gaussians(app, context_images, context_poses, depth_priors);
  result.provenance =
      build_provenance(geo, app, n_context, protocol, images, gt_poses, depth_priors);
  return result;
}

PipelineResult run_pipeline_from_provenance(const std::string& provenance,
                                            const std::vector<ImageBuffer>& images,
                                            const std::vector<CameraPose>& gt_poses,
                                            const std::vector<DepthMap>& depth_priors) {
  const ConfigMap m = parse_config_text(provenance);

  if (parse_hex64(require(m, "hash.images"), "hash.images") != hash_images(images)) {
    fail(ErrorKind::HashMismatch, "image inputs differ from the recorded run");
  }
  if (parse_hex64(require(m, "hash.gt_poses"), "hash.gt_poses") != hash_poses(gt_poses)) {
    fail(ErrorKind::HashMismatch, "ground-truth poses differ from the recorded run");
  }
  if (parse_hex64(require(m, "hash.depths"), "hash.depths") != hash_depths(depth_priors)) {
    fail(ErrorKind::HashMismatch, "depth priors differ from the recorded run");
  }

  GeometryExpertSpec geo;
  const std::string geo_kind = require(m, "geometry.kind");
  if (geo_kind == "noisy_oracle") {
    geo.kind = GeometryExpertKind::kNoisyOracle;
  } else if (geo_kind == "file_backed") {
    geo.kind = GeometryExpertKind::kFileBacked;
  } else {
    fail(ErrorKind::ParseError, "unknown geometry kind '" + geo_kind + "'");
  }
  geo.noise.rot_deg_sigma = config_get_real(m, "geometry.rot_deg_sigma", 0.0);
  geo.noise.trans_rel_sigma = config_get_real(m, "geometry.trans_rel_sigma", 0.0);
  geo.noise.intr_rel_sigma = config_get_real(m, "geometry.intr_rel_sigma", 0.0);
  geo.noise.seed = static_cast<std::uint64_t>(config_get_int(m, "geometry.seed", 0));
  geo.path = config_get(m, "geometry.path", "");

  AppearanceExpertSpec app;
  const std::string app_kind = require(m, "appearance.kind");
  if (app_kind == "fitting") {
    app.kind = AppearanceExpertKind::kFitting;
  } else if (app_kind == "file_backed") {
    app.kind = AppearanceExpertKind::kFileBacked;
  } else {
    fail(ErrorKind::ParseError, "unknown appearance kind '" + app_kind + "'");
  }
  FittingConfig& f = app.fitting;
  f.iterations = static_cast<int>(config_get_int(m, "appearance.iterations", f.iterations));
  f.lr = config_get_real(m, "appearance.lr", f.lr);
  f.constant_depth = config_get_real(m, "appearance.constant_depth", f.constant_depth);
  f.init.opacity_logit =
      static_cast<float>(config_get_real(m, "appearance.opacity_logit", f.init.opacity_logit));
  f.init.footprint_px =
      static_cast<float>(config_get_real(m, "appearance.footprint_px", f.init.footprint_px));
  {
    const std::vector<double> bg = config_get_real_list(m, "appearance.background", {0, 0, 0});
    if (bg.size() != 3) fail(ErrorKind::ParseError, "appearance.background needs 3 values");
    f.background = Eigen::Vector3f(static_cast<float>(bg[0]), static_cast<float>(bg[1]),
                                   static_cast<float>(bg[2]));
  }
  f.render.near_plane = config_get_real(m, "appearance.render.near_plane", f.render.near_plane);
  f.render.dilation = config_get_real(m, "appearance.render.dilation", f.render.dilation);
  f.render.alpha_max = config_get_real(m, "appearance.render.alpha_max", f.render.alpha_max);
  f.render.alpha_cut = config_get_real(m, "appearance.render.alpha_cut", f.render.alpha_cut);
  f.render.t_min = config_get_real(m, "appearance.render.t_min", f.render.t_min);
  f.render.tile_size =
      static_cast<int>(config_get_int(m, "appearance.render.tile_size", f.render.tile_size));
  f.weights.lambda_perc =
      config_get_real(m, "appearance.weights.lambda_perc", f.weights.lambda_perc);
  f.weights.lambda_R = config_get_real(m, "appearance.weights.lambda_R", f.weights.lambda_R);
  f.weights.lambda_t = config_get_real(m, "appearance.weights.lambda_t", f.weights.lambda_t);
  f.weights.lambda_K = config_get_real(m, "appearance.weights.lambda_K", f.weights.lambda_K);
  f.weights.huber_delta =
      config_get_real(m, "appearance.weights.huber_delta", f.weights.huber_delta);
  app.path = config_get(m, "appearance.path", "");

  const Protocol protocol = protocol_from_name(require(m, "protocol"));
  const int n_context = static_cast<int>(config_get_int(m, "n_context", 0));
  return run_pipeline(geo, app, images, n_context, protocol, gt_poses, depth_priors);
}

}  // namespace splatlab
