#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "splatlab/camera.hpp"
#include "splatlab/gaussian.hpp"
#include "splatlab/image.hpp"
#include "splatlab/losses.hpp"
#include "splatlab/renderer.hpp"

namespace splatlab {

// Bias-corrected Adam state over a flat parameter vector.
struct OptimState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimState make(Eigen::Index size, double lr);
  void validate(Eigen::Index expected_size) const;
};

// One in-place Adam step: params <- params - lr * m_hat / (sqrt(v_hat) + eps),
// moments bias-corrected by the incremented step count. When weight_decay is
// non-zero a decoupled decay lr * weight_decay * param is also subtracted —
// from every entry if decay_mask is empty, else from entries with a non-zero
// mask byte. Throws ShapeMismatch on size disagreements and NonFiniteGradient
// on NaN/Inf gradient entries.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, OptimState& state,
               double weight_decay = 0.0,
               const std::vector<std::uint8_t>& decay_mask = {});

// Local camera update, estimated at zero and re-anchored every step:
// R <- exp([omega]x) R, t <- t + dt, and intrinsics stepped in normalized
// units: fx += dk[0]*width, fy += dk[1]*height, cx += dk[2]*width,
// cy += dk[3]*height.
struct PoseIncrement {
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d dt = Eigen::Vector3d::Zero();
  Eigen::Vector4d dk = Eigen::Vector4d::Zero();

  static constexpr int kParamCount = 10;
};

CameraPose apply_increment(const CameraPose& pose, const PoseIncrement& inc);

// One optimization-trace record; csv columns are
// iter,mse,perceptual,render,rot,trans,intr,total,wall_ms.
struct TraceEntry {
  int iter = 0;
  LossBreakdown loss;
  double wall_ms = 0.0;
};

std::string trace_csv_header();
std::string trace_csv_row(const TraceEntry& entry);
std::string trace_csv(const std::vector<TraceEntry>& trace);

// Evaluation-time pose alignment: Adam on per-camera increments against a
// frozen scene.
struct EpaConfig {
  int iters = 100;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool optimize_intrinsics = true;  // false restricts to extrinsics
  bool include_perceptual = true;   // false drops the perceptual term from the objective
  int reorthonormalize_every = 50;  // rotation cleanup period, steps
  RenderConfig render;
  LossWeights weights;

  void validate() const;
};

struct EpaResult {
  std::vector<CameraPose> poses;  // best-seen iterate (ties keep the earliest)
  double initial_loss = 0.0;
  double best_loss = 0.0;
  int best_iter = 0;
  std::vector<TraceEntry> trace;  // entry per evaluation, iterations 0..iters
};

// Refines every camera against its target image by gradient descent on the
// mean render loss with the scene frozen. Returns the best-seen poses (never
// worse than the inputs), the loss trace, and bookkeeping. iters = 0 returns
// the inputs unchanged.
EpaResult align_poses_epa(const GaussianScene& scene, const std::vector<CameraPose>& cameras,
                          const std::vector<ImageBuffer>& targets, const EpaConfig& cfg = {});

// Joint pose + scene refinement. Images hold the n_context context views first
// and the N - n_context target views last; the render term supervises target
// views only, while the camera term (active when gt_poses is non-empty)
// supervises every pose.
struct JointConfig {
  int iters = 100;
  double lr_scene = 2e-5;
  double lr_pose = 2e-5;
  double weight_decay = 0.05;  // decoupled; log_scale and opacity_logit only
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  bool freeze_poses = false;
  bool freeze_scene = false;
  int reorthonormalize_every = 50;
  RenderConfig render;

  void validate() const;
};

struct JointResult {
  std::vector<CameraPose> poses;  // best iterate, all views
  GaussianScene scene;            // best iterate
  double initial_total = 0.0;
  double best_total = 0.0;
  int best_iter = 0;
  std::vector<TraceEntry> trace;
};

JointResult joint_optimize(const std::vector<ImageBuffer>& images, int n_context,
                           const std::vector<CameraPose>& init_poses,
                           const std::vector<CameraPose>& gt_poses,  // empty = unsupervised
                           const GaussianScene& init_scene, const LossWeights& w,
                           const JointConfig& cfg = {});

}  // namespace splatlab
