#include "splatlab/gaussian.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "splatlab/error.hpp"
#include "splatlab/so3.hpp"

namespace splatlab {

Eigen::Matrix3d covariance_from_attributes(const Eigen::Vector3d& log_scale,
                                           const Eigen::Vector4d& rotation_q) {
  if (!log_scale.allFinite() || !rotation_q.allFinite()) {
    fail(ErrorKind::NonFiniteValue, "covariance attributes must be finite");
  }
  if (std::abs(rotation_q.norm() - 1.0) > 1e-9) {
    fail(ErrorKind::UnnormalizedQuaternion, "quaternion must be unit within 1e-9");
  }
  const Eigen::Matrix3d r = quat_to_mat(rotation_q);
  const Eigen::Vector3d s = log_scale.array().exp();
  const Eigen::Matrix3d b = r * s.asDiagonal();
  return b * b.transpose();
}

GaussianScene unproject_pixel_aligned(const DepthMap& depth, const ImageBuffer& colors,
                                      const CameraPose& pose, const InitConfig& init) {
  pose.validate();
  const Intrinsics& k = pose.intrinsics;
  if (depth.width != colors.width || depth.height != colors.height ||
      depth.width != k.width || depth.height != k.height) {
    fail(ErrorKind::ShapeMismatch, "depth/colors/intrinsics dimensions disagree");
  }
  if (!(init.footprint_px > 0.0f)) {
    fail(ErrorKind::InvalidConfig, "footprint_px must be positive");
  }
  const Eigen::Matrix3d r_inv = pose.rotation.transpose();
  GaussianScene scene;
  scene.gaussians.reserve(static_cast<size_t>(depth.width) * depth.height);
  scene.source_view.reserve(scene.gaussians.capacity());
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const double d = depth.at(v, u);
      if (!(d > 0.0) || !std::isfinite(d)) {
        fail(ErrorKind::NonPositiveDepth, "depth must be positive and finite at every pixel");
      }
      const Eigen::Vector3d cam_point(d * (u + 0.5 - k.cx) / k.fx,
                                      d * (v + 0.5 - k.cy) / k.fy, d);
      const Eigen::Vector3d mean = r_inv * (cam_point - pose.translation);
      Gaussian g;
      g.mean = mean.cast<float>();
      const float s = static_cast<float>(std::log(init.footprint_px * d / k.fx));
      g.log_scale = Eigen::Vector3f::Constant(s);
      g.rotation_q = Eigen::Vector4f(1.f, 0.f, 0.f, 0.f);
      g.opacity_logit = init.opacity_logit;
      g.color = Eigen::Vector3f(static_cast<float>(colors.at(v, u, 0)),
                                static_cast<float>(colors.at(v, u, 1)),
                                static_cast<float>(colors.at(v, u, 2)));
      scene.gaussians.push_back(g);
      scene.source_view.push_back(init.source_view);
    }
  }
  return scene;
}

SceneReport validate_scene(const GaussianScene& scene, int n_context) {
  SceneReport report;
  report.renderable = !scene.gaussians.empty();
  for (size_t i = 0; i < scene.gaussians.size(); ++i) {
    const Gaussian& g = scene.gaussians[i];
    const bool finite = g.mean.allFinite() && g.log_scale.allFinite() &&
                        g.rotation_q.allFinite() && std::isfinite(g.opacity_logit) &&
                        g.color.allFinite();
    if (!finite) {
      ++report.nonfinite;
      continue;
    }
    // f32 storage: a unit quaternion rounded to float drifts by a few 1e-8,
    // so the report tolerance is one the storage type can actually satisfy.
    if (std::abs(static_cast<double>(g.rotation_q.norm()) - 1.0) > 1e-6) {
      ++report.bad_quaternion;
    }
  }
  for (const int sv : scene.source_view) {
    if (sv < -1 || (n_context >= 0 && sv >= n_context)) ++report.bad_source_view;
  }
  return report;
}

namespace {

constexpr char kMagic[4] = {'2', 'X', 'P', 'G'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

uint32_t get_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) fail(ErrorKind::IoError, "truncated Gaussian dump");
  return v;
}

}  // namespace

void write_gaussian_dump(std::ostream& out, const GaussianScene& scene) {
  if (scene.source_view.size() != scene.gaussians.size()) {
    fail(ErrorKind::ShapeMismatch, "source_view list must match Gaussian count");
  }
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(scene.gaussians.size()));
  for (const Gaussian& g : scene.gaussians) {
    float rec[kGaussianAttributeCount];
    rec[0] = g.mean[0];
    rec[1] = g.mean[1];
    rec[2] = g.mean[2];
    rec[3] = g.log_scale[0];
    rec[4] = g.log_scale[1];
    rec[5] = g.log_scale[2];
    rec[6] = g.rotation_q[0];
    rec[7] = g.rotation_q[1];
    rec[8] = g.rotation_q[2];
    rec[9] = g.rotation_q[3];
    rec[10] = g.opacity_logit;
    rec[11] = g.color[0];
    rec[12] = g.color[1];
    rec[13] = g.color[2];
    out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
  for (const int sv : scene.source_view) {
    put_u32(out, static_cast<uint32_t>(sv));
  }
}

GaussianScene read_gaussian_dump(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorKind::IoError, "bad Gaussian dump magic");
  }
  const uint32_t version = get_u32(in);
  if (version != kVersion) fail(ErrorKind::IoError, "unsupported Gaussian dump version");
  const uint32_t count = get_u32(in);
  GaussianScene scene;
  scene.gaussians.resize(count);
  scene.source_view.resize(count);
  for (uint32_t i = 0; i < count; ++i) {
    float rec[kGaussianAttributeCount];
    in.read(reinterpret_cast<char*>(rec), sizeof(rec));
    if (!in) fail(ErrorKind::IoError, "truncated Gaussian dump");
    Gaussian& g = scene.gaussians[i];
    g.mean = Eigen::Vector3f(rec[0], rec[1], rec[2]);
    g.log_scale = Eigen::Vector3f(rec[3], rec[4], rec[5]);
    g.rotation_q = Eigen::Vector4f(rec[6], rec[7], rec[8], rec[9]);
    g.opacity_logit = rec[10];
    g.color = Eigen::Vector3f(rec[11], rec[12], rec[13]);
  }
  for (uint32_t i = 0; i < count; ++i) {
    scene.source_view[i] = static_cast<int>(get_u32(in));
  }
  return scene;
}

void write_gaussian_dump_file(const std::string& path, const GaussianScene& scene) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot open for writing: " + path);
  write_gaussian_dump(out, scene);
  out.flush();
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

GaussianScene read_gaussian_dump_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open: " + path);
  return read_gaussian_dump(in);
}

}  // namespace splatlab
