#pragma once

#include <Eigen/Core>
#include <optional>
#include <utility>
#include <vector>

#include "splatlab/camera.hpp"
#include "splatlab/gaussian.hpp"
#include "splatlab/image.hpp"
#include "splatlab/losses.hpp"

namespace splatlab {

struct RenderConfig {
  double near_plane = 0.01;       // camera-space depth cut
  double dilation = 0.3;          // px^2 added to cov2d diagonal
  double alpha_max = 0.999;       // per-sample alpha cap
  double alpha_cut = 1.0 / 255.0; // contributions below this are skipped
  double t_min = 1e-6;            // per-pixel transmittance early-exit
  int tile_size = 16;             // tile edge, pixels
  int threads = 0;                // 0 = hardware concurrency

  void validate() const;
};

// Screen-space footprint of one Gaussian after EWA projection.
struct ProjectedGaussian {
  Eigen::Vector2d mean2d = Eigen::Vector2d::Zero();  // pixels
  Eigen::Matrix2d cov2d = Eigen::Matrix2d::Zero();   // pixels^2, dilation included
  double depth = 0.0;                                // camera-space z
  Eigen::Vector3d color = Eigen::Vector3d::Zero();   // clamped to [0,1]
  double opacity = 0.0;                              // sigmoid(opacity_logit)
};

// EWA projection: cov2d = J R Sigma R^T J^T + dilation * I, mean2d through the
// pinhole. Returns nullopt when culled: depth <= near plane, the 3-sigma
// axis-aligned screen footprint misses the image rectangle, or the cov2d
// determinant falls below the 1e-12 invertibility guard.
std::optional<ProjectedGaussian> project_gaussian(const Gaussian& g, const CameraPose& pose,
                                                  const RenderConfig& cfg = {});

// Tile-based forward rasterization. Gaussians are depth-sorted globally
// (stable tie-break on original index), composited front-to-back per pixel
// with per-sample alpha min(alpha_max, opacity * exp(-0.5 d^T cov2d^{-1} d)),
// early exit once transmittance drops below t_min, background added against
// the remaining transmittance. Deterministic for fixed inputs at any thread
// count. Throws EmptyScene for a scene with zero Gaussians.
ImageBuffer render(const GaussianScene& scene, const CameraPose& pose,
                   const RenderConfig& cfg = {});

// Oracle renderer: same compositing math evaluated exhaustively — per-pixel
// loop over every depth-sorted Gaussian, no tiles, no early exit, double
// precision end to end. Independent straight-line implementation kept free of
// the tile path's machinery.
ImageBuffer render_reference(const GaussianScene& scene, const CameraPose& pose,
                             const RenderConfig& cfg = {});

// Gradient co-shaped with Gaussian fields.
struct GaussianGrad {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
  Eigen::Vector4d rotation_q = Eigen::Vector4d::Zero();
  double opacity_logit = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
};

struct GradientBundle {
  std::vector<GaussianGrad> d_gaussians;  // one per input Gaussian; culled -> zeros
  CameraGrad d_camera;                    // omega (left increment), dt, dfx dfy dcx dcy
};

// Renders exhaustively (no early exit), evaluates the render loss against the
// target, and backpropagates through compositing, EWA projection, covariance
// construction, and the camera. Gradients match central finite differences of
// the returned loss. Per-tile gradient scratch is merged in fixed tile order
// so results are bit-identical at any thread count.
std::pair<RenderLossParts, GradientBundle> render_with_gradients(
    const GaussianScene& scene, const CameraPose& pose, const ImageBuffer& target,
    const LossWeights& w, const RenderConfig& cfg = {});

// Optional auxiliary map: per-pixel accumulated alpha (1 - final transmittance)
// from the same exhaustive forward pass used by the oracle renderer.
DepthMap accumulated_alpha(const GaussianScene& scene, const CameraPose& pose,
                           const RenderConfig& cfg = {});

}  // namespace splatlab
