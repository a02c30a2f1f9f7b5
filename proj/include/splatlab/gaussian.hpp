#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

#include "splatlab/camera.hpp"
#include "splatlab/image.hpp"

namespace splatlab {

// One anisotropic 3D Gaussian. 14 attributes total; binary dumps serialize
// the fields in declaration order as f32.
struct Gaussian {
  Eigen::Vector3f mean = Eigen::Vector3f::Zero();       // world position
  Eigen::Vector3f log_scale = Eigen::Vector3f::Zero();  // log per-axis stddev
  Eigen::Vector4f rotation_q{1.f, 0.f, 0.f, 0.f};       // unit quaternion (w,x,y,z)
  float opacity_logit = 0.0f;                           // opacity = sigmoid(logit)
  Eigen::Vector3f color = Eigen::Vector3f::Zero();      // RGB in [0,1]
};

inline constexpr int kGaussianAttributeCount = 14;

struct GaussianScene {
  std::vector<Gaussian> gaussians;
  // Context view each Gaussian was unprojected from, -1 when free-standing.
  std::vector<int> source_view;
  Eigen::Vector3f background_color = Eigen::Vector3f::Zero();

  size_t size() const { return gaussians.size(); }
};

struct InitConfig {
  float opacity_logit = 0.0f;  // initial opacity logit (0 -> opacity 0.5)
  float footprint_px = 1.0f;   // projected footprint target in pixels
  int source_view = 0;         // tag recorded for every created Gaussian
};

// Sigma = R S S^T R^T with S = diag(exp(log_scale)). Quaternion must be unit
// within 1e-9 (UnnormalizedQuaternion otherwise).
Eigen::Matrix3d covariance_from_attributes(const Eigen::Vector3d& log_scale,
                                           const Eigen::Vector4d& rotation_q);

// One Gaussian per pixel: mean = R^{-1}(d * K^{-1}(u+0.5, v+0.5, 1) - t) at
// d = depth(v,u), color from the image, log_scale = log(footprint_px * d / fx)
// on every axis so the projected footprint spans ~footprint_px pixels.
GaussianScene unproject_pixel_aligned(const DepthMap& depth, const ImageBuffer& colors,
                                      const CameraPose& pose, const InitConfig& init = {});

struct SceneReport {
  int nonfinite = 0;         // Gaussians with any non-finite attribute
  int bad_quaternion = 0;    // quaternion norm off unit beyond 1e-6
  int bad_source_view = 0;   // source_view < -1, or >= n_context when known
  bool renderable = false;   // non-empty Gaussian list
  int total_violations() const { return nonfinite + bad_quaternion + bad_source_view; }
};

// Report-only check; n_context < 0 means the context-view count is unknown and
// only source_view >= -1 is required.
SceneReport validate_scene(const GaussianScene& scene, int n_context = -1);

// Binary scene dump. Layout, all little-endian: magic "2XPG", u32 version = 1,
// u32 count, count x 14 f32 attribute records, then count x u32 source_view
// (-1 stored as 0xFFFFFFFF). The background color is render-time state and is
// not part of the dump.
void write_gaussian_dump(std::ostream& out, const GaussianScene& scene);
GaussianScene read_gaussian_dump(std::istream& in);
void write_gaussian_dump_file(const std::string& path, const GaussianScene& scene);
GaussianScene read_gaussian_dump_file(const std::string& path);

}  // namespace splatlab
