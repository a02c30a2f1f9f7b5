#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace splatlab {

// Cross-product matrix: skew(v) * u == v x u.
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// c_a = <F, skew(e_a)> — contraction of F against the three axis skews
// (the vee of the antisymmetric part of F, doubled).
Eigen::Vector3d skew_contract(const Eigen::Matrix3d& f);

// Rodrigues exponential map. exp_so3(0) returns the identity exactly so a
// zero increment leaves a rotation bit-identical.
Eigen::Matrix3d exp_so3(const Eigen::Vector3d& omega);

// Quaternion (w, x, y, z) -> rotation matrix. The quaternion is normalized
// first; a zero-norm quaternion raises InvalidQuaternion.
Eigen::Matrix3d quat_to_mat(const Eigen::Vector4d& q_wxyz);

// Rotation matrix -> unit quaternion (w, x, y, z), canonical sign (w >= 0;
// if w == 0, first nonzero component positive).
Eigen::Vector4d mat_to_quat(const Eigen::Matrix3d& r);

// True when R^T R = I within tol (max-abs) and det(R) > 0.
bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

// Projects a drifted rotation back onto SO(3) via a quaternion round-trip.
Eigen::Matrix3d reorthonormalize(const Eigen::Matrix3d& r);

}  // namespace splatlab
