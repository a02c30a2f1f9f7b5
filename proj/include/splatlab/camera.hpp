#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace splatlab {

inline constexpr double kDefaultNearPlane = 0.01;
inline constexpr double kRotationTol = 1e-9;

struct Intrinsics {
  double fx = 0.0, fy = 0.0;  // focal lengths, pixels
  double cx = 0.0, cy = 0.0;  // principal point, pixels
  int width = 0, height = 0;  // image size, pixels

  // Throws InvalidIntrinsics unless fx,fy > 0 and 0 <= cx < width, 0 <= cy < height.
  void validate() const;
};

// Rigid camera: x_cam = rotation * x_world + translation (world-to-camera).
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Intrinsics intrinsics;

  // Throws NonOrthonormalRotation / NonFiniteValue / InvalidIntrinsics.
  void validate() const;
};

// Pose of camera j expressed against camera i: T_i * T_rel == T_j as 4x4
// homogeneous world-to-camera matrices.
struct RelativePose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

// (R, t) -> (R^T, -R^T t); intrinsics carried through unchanged.
CameraPose invert_pose(const CameraPose& pose);

// T_rel = T_i^{-1} T_j: rotation = R_i^T R_j, translation = R_i^T (t_j - t_i).
RelativePose relative_pose(const CameraPose& pose_i, const CameraPose& pose_j);

// Geodesic distance between rotations in radians: the angle of r1^T r2,
// evaluated as atan2(sin, cos) with the sine taken from the antisymmetric
// part so identical inputs return exactly 0 (acos of the clamped trace alone
// loses ~8 digits near zero angle). Throws NonOrthonormalRotation if either
// input is off-manifold.
double rotation_geodesic_angle(const Eigen::Matrix3d& r1, const Eigen::Matrix3d& r2);

// Divides every translation by the max translation norm so max ||t|| == 1.
// Returns the normalized poses and the scale divided out.
// Throws DegenerateScale when max ||t|| < 1e-12, EmptyInput on an empty list.
std::pair<std::vector<CameraPose>, double> normalize_scene_scale(
    const std::vector<CameraPose>& poses);

struct PixelProjection {
  double u = 0.0, v = 0.0;
  double depth = 0.0;
  bool behind = false;  // depth <= near plane; u, v not meaningful then
};

PixelProjection project_point(const Eigen::Vector3d& point_world, const CameraPose& pose,
                              double near_plane = kDefaultNearPlane);

// Pose text format, one camera per line:
//   frame_id qw qx qy qz tx ty tz fx fy cx cy width height
// Quaternion (w,x,y,z) encodes the world-to-camera rotation. `#` starts a
// comment line. Values written with 17 significant digits so doubles
// round-trip exactly.
void write_pose_text(std::ostream& out, const std::vector<CameraPose>& poses);
std::vector<CameraPose> read_pose_text(std::istream& in);
void write_pose_file(const std::string& path, const std::vector<CameraPose>& poses);
std::vector<CameraPose> read_pose_file(const std::string& path);

}  // namespace splatlab
