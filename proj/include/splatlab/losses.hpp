#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "splatlab/camera.hpp"
#include "splatlab/image.hpp"

namespace splatlab {

struct LossWeights {
  double lambda_perc = 0.5;  // weight of the perceptual proxy in the render loss
  double lambda_R = 0.1;     // relative-rotation term
  double lambda_t = 10.0;    // relative-translation term
  double lambda_K = 0.5;     // intrinsics term
  double huber_delta = 1.0;  // Huber threshold for the translation residual

  void validate() const;  // non-negative and finite; huber_delta > 0
};

struct LossBreakdown {
  double mse = 0.0;
  double perceptual = 0.0;  // gradient-map proxy (perceptual_proxy), not a network loss
  double render = 0.0;      // mse + lambda_perc * perceptual
  double rot = 0.0;         // mean L_R over ordered pairs
  double trans = 0.0;       // mean L_t over ordered pairs
  double intr = 0.0;        // mean L_K over views
  double cam = 0.0;         // full pairwise camera-loss aggregate
  double total = 0.0;       // render + cam

  static std::string csv_header();  // "mse,perceptual,render,rot,trans,intr,cam,total"
  std::string csv_row() const;
};

// Sum over components of rho_delta(r): 0.5 r^2 inside |r| <= delta, else
// delta (|r| - delta/2). Throws NonPositiveDelta.
double huber(const Eigen::VectorXd& residual, double delta);
// d huber / d residual, per component: r inside the quadratic branch,
// delta * sign(r) outside.
Eigen::VectorXd huber_gradient(const Eigen::VectorXd& residual, double delta);

// Geodesic angle between relative rotations, radians in [0, pi].
double rotation_loss(const RelativePose& rel_pred, const RelativePose& rel_gt);

// huber(rel_pred.translation - rel_gt.translation, delta).
double translation_loss(const RelativePose& rel_pred, const RelativePose& rel_gt,
                        double delta);

// Squared l2 over (fx/width, fy/height, cx/width, cy/height) differences.
// Throws ShapeMismatch when the image dimensions differ.
double intrinsics_loss(const Intrinsics& k_pred, const Intrinsics& k_gt);

// (1/(N(N-1))) sum_{i != j} (lambda_R L_R + lambda_t L_t) + (lambda_K/N) sum_j L_K(j).
double camera_loss(const std::vector<CameraPose>& pred, const std::vector<CameraPose>& gt,
                   const LossWeights& w);

struct CameraLossParts {
  double cam = 0.0;    // weighted aggregate (the camera_loss value)
  double rot = 0.0;    // unweighted mean of L_R over ordered pairs
  double trans = 0.0;  // unweighted mean of L_t over ordered pairs
  double intr = 0.0;   // unweighted mean of L_K over views
};
CameraLossParts camera_loss_parts(const std::vector<CameraPose>& pred,
                                  const std::vector<CameraPose>& gt, const LossWeights& w);

// Gradient of a loss with respect to one camera's local increment: a
// left-multiplied axis-angle rotation step omega (evaluated at omega = 0), an
// additive translation step, and raw-unit intrinsics steps.
struct CameraGrad {
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d dt = Eigen::Vector3d::Zero();
  double dfx = 0.0, dfy = 0.0, dcx = 0.0, dcy = 0.0;

  CameraGrad& operator+=(const CameraGrad& o);
  CameraGrad& operator*=(double s);
};

// Analytic gradient of camera_loss w.r.t. every predicted pose's increment.
// Matches central finite differences within 1e-6 relative away from the
// rotation loss's non-smooth zero-angle point.
std::vector<CameraGrad> camera_loss_gradients(const std::vector<CameraPose>& pred,
                                              const std::vector<CameraPose>& gt,
                                              const LossWeights& w);

// Mean squared difference between horizontal+vertical finite-difference
// gradient maps. Deterministic stand-in for a pretrained perceptual loss;
// reported as "perceptual" in breakdowns.
double perceptual_proxy(const ImageBuffer& a, const ImageBuffer& b);

struct RenderLossParts {
  double mse = 0.0;
  double perceptual_proxy = 0.0;
  double combined = 0.0;  // mse + lambda_perc * perceptual_proxy
};
RenderLossParts render_loss(const ImageBuffer& rendered, const ImageBuffer& target,
                            const LossWeights& w);

// Full objective: mean render loss over target pairs plus the camera loss.
// Pose lists may both be empty (no camera supervision -> cam terms all 0);
// otherwise they must have equal length N >= 2.
LossBreakdown total_loss(const std::vector<ImageBuffer>& rendered,
                         const std::vector<ImageBuffer>& targets,
                         const std::vector<CameraPose>& pred_poses,
                         const std::vector<CameraPose>& gt_poses, const LossWeights& w);

}  // namespace splatlab
