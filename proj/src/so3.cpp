#include "splatlab/so3.hpp"

#include <cmath>

#include "splatlab/error.hpp"

namespace splatlab {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Vector3d skew_contract(const Eigen::Matrix3d& f) {
  return Eigen::Vector3d(f(2, 1) - f(1, 2), f(0, 2) - f(2, 0), f(1, 0) - f(0, 1));
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& omega) {
  const double theta = omega.norm();
  if (theta < 1e-14) {
    return Eigen::Matrix3d::Identity();
  }
  const Eigen::Vector3d axis = omega / theta;
  return Eigen::AngleAxisd(theta, axis).toRotationMatrix();
}

Eigen::Matrix3d quat_to_mat(const Eigen::Vector4d& q_wxyz) {
  const double n = q_wxyz.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    fail(ErrorKind::InvalidQuaternion, "quaternion has zero or non-finite norm");
  }
  const Eigen::Vector4d q = q_wxyz / n;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d m;
  m << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
       2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
       2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return m;
}

Eigen::Vector4d mat_to_quat(const Eigen::Matrix3d& r) {
  const Eigen::Quaterniond q(r);
  Eigen::Vector4d out(q.w(), q.x(), q.y(), q.z());
  for (int i = 0; i < 4; ++i) {
    if (out[i] > 0.0) break;
    if (out[i] < 0.0) {
      out = -out;
      break;
    }
  }
  return out / out.norm();
}

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  if (!r.allFinite()) return false;
  const Eigen::Matrix3d residual = r.transpose() * r - Eigen::Matrix3d::Identity();
  if (residual.cwiseAbs().maxCoeff() > tol) return false;
  return r.determinant() > 0.0;
}

Eigen::Matrix3d reorthonormalize(const Eigen::Matrix3d& r) {
  return quat_to_mat(mat_to_quat(r));
}

}  // namespace splatlab
