#include "splatlab/optim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <utility>

#include "splatlab/error.hpp"
#include "splatlab/so3.hpp"

namespace splatlab {

OptimState OptimState::make(Eigen::Index size, double lr_in) {
  OptimState s;
  s.first_moment = Eigen::VectorXd::Zero(size);
  s.second_moment = Eigen::VectorXd::Zero(size);
  s.lr = lr_in;
  return s;
}

void OptimState::validate(Eigen::Index expected_size) const {
  if (first_moment.size() != expected_size || second_moment.size() != expected_size) {
    fail(ErrorKind::ShapeMismatch, "optimizer moments do not match the parameter size");
  }
  if (!first_moment.allFinite() || !second_moment.allFinite()) {
    fail(ErrorKind::NonFiniteValue, "optimizer moments contain non-finite entries");
  }
  if (step_count < 0) fail(ErrorKind::InvalidConfig, "step_count must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorKind::InvalidConfig, "lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail(ErrorKind::InvalidConfig, "betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) fail(ErrorKind::InvalidConfig, "eps must be > 0");
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, OptimState& state,
               double weight_decay, const std::vector<std::uint8_t>& decay_mask) {
  if (params.size() != grads.size()) {
    fail(ErrorKind::ShapeMismatch, "params and grads differ in size");
  }
  state.validate(params.size());
  if (!grads.allFinite()) {
    fail(ErrorKind::NonFiniteGradient, "gradient contains NaN/Inf entries");
  }
  if (!decay_mask.empty() && static_cast<Eigen::Index>(decay_mask.size()) != params.size()) {
    fail(ErrorKind::ShapeMismatch, "decay mask does not match the parameter size");
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double corr1 = 1.0 - std::pow(state.beta1, t);
  const double corr2 = 1.0 - std::pow(state.beta2, t);
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / corr1;
    const double v_hat = v / corr2;
    double update = state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    if (weight_decay != 0.0 && (decay_mask.empty() || decay_mask[static_cast<size_t>(i)])) {
      update += state.lr * weight_decay * params[i];
    }
    params[i] -= update;
  }
}

CameraPose apply_increment(const CameraPose& pose, const PoseIncrement& inc) {
  if (!inc.omega.allFinite() || !inc.dt.allFinite() || !inc.dk.allFinite()) {
    fail(ErrorKind::NonFiniteValue, "pose increment has non-finite entries");
  }
  CameraPose out = pose;
  // Exact zeros leave each field bit-identical (no 1*x or x+0 round trips).
  if (inc.omega.x() != 0.0 || inc.omega.y() != 0.0 || inc.omega.z() != 0.0) {
    out.rotation = exp_so3(inc.omega) * pose.rotation;
  }
  if (inc.dt.x() != 0.0 || inc.dt.y() != 0.0 || inc.dt.z() != 0.0) {
    out.translation += inc.dt;
  }
  const double w = static_cast<double>(pose.intrinsics.width);
  const double h = static_cast<double>(pose.intrinsics.height);
  if (inc.dk[0] != 0.0) out.intrinsics.fx += inc.dk[0] * w;
  if (inc.dk[1] != 0.0) out.intrinsics.fy += inc.dk[1] * h;
  if (inc.dk[2] != 0.0) out.intrinsics.cx += inc.dk[2] * w;
  if (inc.dk[3] != 0.0) out.intrinsics.cy += inc.dk[3] * h;
  return out;
}

std::string trace_csv_header() {
  return "iter,mse,perceptual,render,rot,trans,intr,total,wall_ms";
}

std::string trace_csv_row(const TraceEntry& e) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f", e.iter,
                e.loss.mse, e.loss.perceptual, e.loss.render, e.loss.rot, e.loss.trans,
                e.loss.intr, e.loss.total, e.wall_ms);
  return buf;
}

std::string trace_csv(const std::vector<TraceEntry>& trace) {
  std::ostringstream out;
  out << trace_csv_header() << '\n';
  for (const TraceEntry& e : trace) out << trace_csv_row(e) << '\n';
  return out.str();
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

// The single finite-guard: non-finite gradient entries are dropped rather than
// fed to Adam (no clipping-by-norm).
void zero_non_finite(Eigen::VectorXd& g) {
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) g[i] = 0.0;
  }
}

void pack_camera_grad(const CameraGrad& cg, double scale, const Intrinsics& k,
                      bool include_intrinsics, Eigen::Ref<Eigen::VectorXd> block) {
  block.segment<3>(0) += scale * cg.omega;
  block.segment<3>(3) += scale * cg.dt;
  if (include_intrinsics) {
    // Increments live in normalized units (dk scaled by image size on apply).
    block[6] += scale * cg.dfx * static_cast<double>(k.width);
    block[7] += scale * cg.dfy * static_cast<double>(k.height);
    block[8] += scale * cg.dcx * static_cast<double>(k.width);
    block[9] += scale * cg.dcy * static_cast<double>(k.height);
  }
}

PoseIncrement increment_from(const Eigen::VectorXd& params, int cam_index) {
  PoseIncrement inc;
  const Eigen::Index base = static_cast<Eigen::Index>(cam_index) * PoseIncrement::kParamCount;
  inc.omega = params.segment<3>(base);
  inc.dt = params.segment<3>(base + 3);
  inc.dk = params.segment<4>(base + 6);
  return inc;
}

}  // namespace

void EpaConfig::validate() const {
  if (iters < 0) fail(ErrorKind::InvalidConfig, "iters must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorKind::InvalidConfig, "lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail(ErrorKind::InvalidConfig, "betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) fail(ErrorKind::InvalidConfig, "eps must be > 0");
  if (reorthonormalize_every < 1) {
    fail(ErrorKind::InvalidConfig, "reorthonormalize_every must be >= 1");
  }
  render.validate();
  weights.validate();
}

EpaResult align_poses_epa(const GaussianScene& scene, const std::vector<CameraPose>& cameras,
                          const std::vector<ImageBuffer>& targets, const EpaConfig& cfg) {
  cfg.validate();
  if (cameras.size() != targets.size()) {
    fail(ErrorKind::LengthMismatch, "one target image per camera is required");
  }
  if (cameras.empty()) fail(ErrorKind::EmptyInput, "no cameras to align");

  LossWeights wl = cfg.weights;
  if (!cfg.include_perceptual) wl.lambda_perc = 0.0;

  const int v_count = static_cast<int>(cameras.size());
  const Eigen::Index p_count =
      static_cast<Eigen::Index>(v_count) * PoseIncrement::kParamCount;
  Eigen::VectorXd params = Eigen::VectorXd::Zero(p_count);
  OptimState state = OptimState::make(p_count, cfg.lr);
  state.beta1 = cfg.beta1;
  state.beta2 = cfg.beta2;
  state.eps = cfg.eps;

  EpaResult result;
  result.poses = cameras;
  result.best_loss = std::numeric_limits<double>::infinity();
  std::vector<CameraPose> poses = cameras;
  const double inv_v = 1.0 / static_cast<double>(v_count);

  for (int iter = 0; iter <= cfg.iters; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    Eigen::VectorXd grads = Eigen::VectorXd::Zero(p_count);
    double mse_sum = 0.0, perc_sum = 0.0, loss_sum = 0.0;
    for (int v = 0; v < v_count; ++v) {
      const auto [parts, bundle] =
          render_with_gradients(scene, poses[static_cast<size_t>(v)],
                                targets[static_cast<size_t>(v)], wl, cfg.render);
      mse_sum += parts.mse;
      perc_sum += parts.perceptual_proxy;
      loss_sum += parts.combined;
      pack_camera_grad(bundle.d_camera, inv_v, poses[static_cast<size_t>(v)].intrinsics,
                       cfg.optimize_intrinsics,
                       grads.segment(static_cast<Eigen::Index>(v) * PoseIncrement::kParamCount,
                                     PoseIncrement::kParamCount));
    }

    TraceEntry entry;
    entry.iter = iter;
    entry.loss.mse = mse_sum * inv_v;
    entry.loss.perceptual = perc_sum * inv_v;
    entry.loss.render = loss_sum * inv_v;
    entry.loss.total = entry.loss.render;

    if (entry.loss.render < result.best_loss) {
      result.best_loss = entry.loss.render;
      result.best_iter = iter;
      result.poses = poses;
    }

    if (iter < cfg.iters) {
      zero_non_finite(grads);
      adam_step(params, grads, state);
      for (int v = 0; v < v_count; ++v) {
        poses[static_cast<size_t>(v)] =
            apply_increment(poses[static_cast<size_t>(v)], increment_from(params, v));
      }
      params.setZero();
      if (state.step_count % cfg.reorthonormalize_every == 0) {
        for (CameraPose& p : poses) p.rotation = reorthonormalize(p.rotation);
      }
    }

    entry.wall_ms = elapsed_ms(t0);
    result.trace.push_back(entry);
  }

  result.initial_loss = result.trace.front().loss.render;
  return result;
}

void JointConfig::validate() const {
  if (iters < 0) fail(ErrorKind::InvalidConfig, "iters must be >= 0");
  if (!(lr_scene > 0.0) || !std::isfinite(lr_scene) || !(lr_pose > 0.0) ||
      !std::isfinite(lr_pose)) {
    fail(ErrorKind::InvalidConfig, "learning rates must be > 0");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    fail(ErrorKind::InvalidConfig, "weight_decay must be >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail(ErrorKind::InvalidConfig, "betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) fail(ErrorKind::InvalidConfig, "eps must be > 0");
  if (reorthonormalize_every < 1) {
    fail(ErrorKind::InvalidConfig, "reorthonormalize_every must be >= 1");
  }
  render.validate();
}

namespace {

// Flat layout per Gaussian: mean(3), log_scale(3), rotation_q(4, wxyz),
// opacity_logit(1), color(3) — matching the binary dump field order.
Eigen::VectorXd pack_scene(const GaussianScene& scene) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(scene.gaussians.size()) *
                      kGaussianAttributeCount);
  Eigen::Index at = 0;
  for (const Gaussian& g : scene.gaussians) {
    out.segment<3>(at) = g.mean.cast<double>();
    out.segment<3>(at + 3) = g.log_scale.cast<double>();
    out.segment<4>(at + 6) = g.rotation_q.cast<double>();
    out[at + 10] = static_cast<double>(g.opacity_logit);
    out.segment<3>(at + 11) = g.color.cast<double>();
    at += kGaussianAttributeCount;
  }
  return out;
}

void unpack_scene(const Eigen::VectorXd& params, GaussianScene& scene) {
  Eigen::Index at = 0;
  for (Gaussian& g : scene.gaussians) {
    g.mean = params.segment<3>(at).cast<float>();
    g.log_scale = params.segment<3>(at + 3).cast<float>();
    g.rotation_q = params.segment<4>(at + 6).cast<float>();
    g.opacity_logit = static_cast<float>(params[at + 10]);
    g.color = params.segment<3>(at + 11).cast<float>();
    at += kGaussianAttributeCount;
  }
}

void pack_gaussian_grads(const std::vector<GaussianGrad>& grads, double scale,
                         Eigen::VectorXd& out) {
  Eigen::Index at = 0;
  for (const GaussianGrad& g : grads) {
    out.segment<3>(at) += scale * g.mean;
    out.segment<3>(at + 3) += scale * g.log_scale;
    out.segment<4>(at + 6) += scale * g.rotation_q;
    out[at + 10] += scale * g.opacity_logit;
    out.segment<3>(at + 11) += scale * g.color;
    at += kGaussianAttributeCount;
  }
}

}  // namespace

JointResult joint_optimize(const std::vector<ImageBuffer>& images, int n_context,
                           const std::vector<CameraPose>& init_poses,
                           const std::vector<CameraPose>& gt_poses,
                           const GaussianScene& init_scene, const LossWeights& w,
                           const JointConfig& cfg) {
  cfg.validate();
  w.validate();
  const int n = static_cast<int>(images.size());
  if (static_cast<int>(init_poses.size()) != n) {
    fail(ErrorKind::LengthMismatch, "one pose per image is required");
  }
  if (n_context < 0 || n_context > n) {
    fail(ErrorKind::InvalidConfig, "n_context outside [0, view count]");
  }
  const int n_targets = n - n_context;
  if (n_targets < 1) fail(ErrorKind::TooFewTargets, "joint optimization needs a target view");
  const bool supervised = !gt_poses.empty();
  if (supervised && static_cast<int>(gt_poses.size()) != n) {
    fail(ErrorKind::LengthMismatch, "gt pose list must cover every view");
  }

  const Eigen::Index scene_size =
      static_cast<Eigen::Index>(init_scene.gaussians.size()) * kGaussianAttributeCount;
  const Eigen::Index pose_size = static_cast<Eigen::Index>(n) * PoseIncrement::kParamCount;

  Eigen::VectorXd scene_params = pack_scene(init_scene);
  std::vector<std::uint8_t> decay_mask(static_cast<size_t>(scene_size), 0);
  for (Eigen::Index g = 0; g * kGaussianAttributeCount < scene_size; ++g) {
    const Eigen::Index base = g * kGaussianAttributeCount;
    decay_mask[static_cast<size_t>(base + 3)] = 1;  // log_scale
    decay_mask[static_cast<size_t>(base + 4)] = 1;
    decay_mask[static_cast<size_t>(base + 5)] = 1;
    decay_mask[static_cast<size_t>(base + 10)] = 1;  // opacity_logit
  }

  OptimState scene_state = OptimState::make(scene_size, cfg.lr_scene);
  scene_state.beta1 = cfg.beta1;
  scene_state.beta2 = cfg.beta2;
  scene_state.eps = cfg.eps;
  OptimState pose_state = OptimState::make(pose_size, cfg.lr_pose);
  pose_state.beta1 = cfg.beta1;
  pose_state.beta2 = cfg.beta2;
  pose_state.eps = cfg.eps;
  Eigen::VectorXd pose_params = Eigen::VectorXd::Zero(pose_size);

  GaussianScene scene = init_scene;
  std::vector<CameraPose> poses = init_poses;

  JointResult result;
  result.best_total = std::numeric_limits<double>::infinity();
  result.poses = poses;
  result.scene = scene;
  const double inv_t = 1.0 / static_cast<double>(n_targets);

  for (int iter = 0; iter <= cfg.iters; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    Eigen::VectorXd scene_grads = Eigen::VectorXd::Zero(scene_size);
    Eigen::VectorXd pose_grads = Eigen::VectorXd::Zero(pose_size);

    double mse_sum = 0.0, perc_sum = 0.0, render_sum = 0.0;
    for (int t = 0; t < n_targets; ++t) {
      const int v = n_context + t;
      const auto [parts, bundle] = render_with_gradients(
          scene, poses[static_cast<size_t>(v)], images[static_cast<size_t>(v)], w, cfg.render);
      mse_sum += parts.mse;
      perc_sum += parts.perceptual_proxy;
      render_sum += parts.combined;
      pack_gaussian_grads(bundle.d_gaussians, inv_t, scene_grads);
      pack_camera_grad(bundle.d_camera, inv_t, poses[static_cast<size_t>(v)].intrinsics, true,
                       pose_grads.segment(static_cast<Eigen::Index>(v) *
                                              PoseIncrement::kParamCount,
                                          PoseIncrement::kParamCount));
    }

    TraceEntry entry;
    entry.iter = iter;
    entry.loss.mse = mse_sum * inv_t;
    entry.loss.perceptual = perc_sum * inv_t;
    entry.loss.render = render_sum * inv_t;
    if (supervised) {
      const CameraLossParts cam = camera_loss_parts(poses, gt_poses, w);
      entry.loss.rot = cam.rot;
      entry.loss.trans = cam.trans;
      entry.loss.intr = cam.intr;
      entry.loss.cam = cam.cam;
      const std::vector<CameraGrad> cam_grads = camera_loss_gradients(poses, gt_poses, w);
      for (int v = 0; v < n; ++v) {
        pack_camera_grad(cam_grads[static_cast<size_t>(v)], 1.0,
                         poses[static_cast<size_t>(v)].intrinsics, true,
                         pose_grads.segment(static_cast<Eigen::Index>(v) *
                                                PoseIncrement::kParamCount,
                                            PoseIncrement::kParamCount));
      }
    }
    entry.loss.total = entry.loss.render + entry.loss.cam;

    if (entry.loss.total < result.best_total) {
      result.best_total = entry.loss.total;
      result.best_iter = iter;
      result.poses = poses;
      result.scene = scene;
    }

    if (iter < cfg.iters) {
      if (!cfg.freeze_scene) {
        zero_non_finite(scene_grads);
        adam_step(scene_params, scene_grads, scene_state, cfg.weight_decay, decay_mask);
      }
      if (!cfg.freeze_poses) {
        zero_non_finite(pose_grads);
        adam_step(pose_params, pose_grads, pose_state);
        for (int v = 0; v < n; ++v) {
          poses[static_cast<size_t>(v)] =
              apply_increment(poses[static_cast<size_t>(v)], increment_from(pose_params, v));
        }
        pose_params.setZero();
      }
      const long steps = std::max(scene_state.step_count, pose_state.step_count);
      if (steps > 0 && steps % cfg.reorthonormalize_every == 0) {
        if (!cfg.freeze_poses) {
          for (CameraPose& p : poses) p.rotation = reorthonormalize(p.rotation);
        }
        if (!cfg.freeze_scene) {
          for (Eigen::Index g = 0; g * kGaussianAttributeCount < scene_size; ++g) {
            const Eigen::Index base = g * kGaussianAttributeCount + 6;
            const double norm = scene_params.segment<4>(base).norm();
            if (norm > 0.0 && std::isfinite(norm)) scene_params.segment<4>(base) /= norm;
          }
        }
      }
      if (!cfg.freeze_scene) unpack_scene(scene_params, scene);
    }

    entry.wall_ms = elapsed_ms(t0);
    result.trace.push_back(entry);
  }

  result.initial_total = result.trace.front().loss.total;
  return result;
}

}  // namespace splatlab
