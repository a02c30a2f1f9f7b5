#include "splatlab/camera.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "splatlab/error.hpp"
#include "splatlab/so3.hpp"

namespace splatlab {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    fail(ErrorKind::InvalidIntrinsics, "focal lengths must be positive and finite");
  }
  if (width <= 0 || height <= 0) {
    fail(ErrorKind::InvalidIntrinsics, "image dimensions must be positive");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy) || cx < 0.0 || cx >= width || cy < 0.0 ||
      cy >= height) {
    fail(ErrorKind::InvalidIntrinsics, "principal point must lie inside the image");
  }
}

void CameraPose::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    fail(ErrorKind::NonFiniteValue, "pose entries must be finite");
  }
  if (!is_rotation(rotation, kRotationTol)) {
    fail(ErrorKind::NonOrthonormalRotation, "rotation fails orthonormality within 1e-9");
  }
  intrinsics.validate();
}

CameraPose invert_pose(const CameraPose& pose) {
  pose.validate();
  CameraPose out = pose;
  out.rotation = pose.rotation.transpose();
  out.translation = -(pose.rotation.transpose() * pose.translation);
  return out;
}

RelativePose relative_pose(const CameraPose& pose_i, const CameraPose& pose_j) {
  pose_i.validate();
  pose_j.validate();
  RelativePose rel;
  rel.rotation = pose_i.rotation.transpose() * pose_j.rotation;
  rel.translation = pose_i.rotation.transpose() * (pose_j.translation - pose_i.translation);
  return rel;
}

double rotation_geodesic_angle(const Eigen::Matrix3d& r1, const Eigen::Matrix3d& r2) {
  if (!is_rotation(r1, kRotationTol) || !is_rotation(r2, kRotationTol)) {
    fail(ErrorKind::NonOrthonormalRotation, "geodesic angle needs valid rotations");
  }
  // atan2 of (sin, cos) of the relative angle instead of acos(cos): acos
  // amplifies trace rounding to ~1e-8 near zero angle, while the sine read
  // from the antisymmetric part keeps identical inputs at exactly 0.
  const Eigen::Matrix3d rel = r1.transpose() * r2;
  const double cos_angle = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Eigen::Vector3d anti(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0),
                             rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * anti.norm(), cos_angle);
}

std::pair<std::vector<CameraPose>, double> normalize_scene_scale(
    const std::vector<CameraPose>& poses) {
  if (poses.empty()) {
    fail(ErrorKind::EmptyInput, "normalize_scene_scale needs at least one pose");
  }
  double scale = 0.0;
  for (const CameraPose& p : poses) {
    p.validate();
    scale = std::max(scale, p.translation.norm());
  }
  if (scale < 1e-12) {
    fail(ErrorKind::DegenerateScale, "all camera translations at the origin");
  }
  std::vector<CameraPose> out = poses;
  for (CameraPose& p : out) {
    p.translation /= scale;
  }
  return {std::move(out), scale};
}

PixelProjection project_point(const Eigen::Vector3d& point_world, const CameraPose& pose,
                              double near_plane) {
  const Eigen::Vector3d p = pose.rotation * point_world + pose.translation;
  PixelProjection out;
  out.depth = p.z();
  if (p.z() <= near_plane) {
    out.behind = true;
    return out;
  }
  out.u = pose.intrinsics.fx * p.x() / p.z() + pose.intrinsics.cx;
  out.v = pose.intrinsics.fy * p.y() / p.z() + pose.intrinsics.cy;
  return out;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_pose_text(std::ostream& out, const std::vector<CameraPose>& poses) {
  out << "# frame_id qw qx qy qz tx ty tz fx fy cx cy width height\n";
  for (size_t i = 0; i < poses.size(); ++i) {
    const CameraPose& p = poses[i];
    const Eigen::Vector4d q = mat_to_quat(p.rotation);
    out << i;
    for (int k = 0; k < 4; ++k) out << ' ' << fmt17(q[k]);
    for (int k = 0; k < 3; ++k) out << ' ' << fmt17(p.translation[k]);
    out << ' ' << fmt17(p.intrinsics.fx) << ' ' << fmt17(p.intrinsics.fy) << ' '
        << fmt17(p.intrinsics.cx) << ' ' << fmt17(p.intrinsics.cy) << ' '
        << p.intrinsics.width << ' ' << p.intrinsics.height << '\n';
  }
}

std::vector<CameraPose> read_pose_text(std::istream& in) {
  std::vector<CameraPose> poses;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    long frame_id = 0;
    Eigen::Vector4d q;
    CameraPose p;
    if (!(ls >> frame_id >> q[0] >> q[1] >> q[2] >> q[3] >> p.translation[0] >>
          p.translation[1] >> p.translation[2] >> p.intrinsics.fx >> p.intrinsics.fy >>
          p.intrinsics.cx >> p.intrinsics.cy >> p.intrinsics.width >> p.intrinsics.height)) {
      fail(ErrorKind::ParseError, "malformed pose line " + std::to_string(lineno));
    }
    p.rotation = quat_to_mat(q);
    p.validate();
    poses.push_back(p);
  }
  return poses;
}

void write_pose_file(const std::string& path, const std::vector<CameraPose>& poses) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot open for writing: " + path);
  write_pose_text(out, poses);
  out.flush();
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

std::vector<CameraPose> read_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open: " + path);
  return read_pose_text(in);
}

}  // namespace splatlab
