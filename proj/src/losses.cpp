#include "splatlab/losses.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "splatlab/error.hpp"
#include "splatlab/so3.hpp"

namespace splatlab {

void LossWeights::validate() const {
  const double vals[] = {lambda_perc, lambda_R, lambda_t, lambda_K, huber_delta};
  for (double v : vals) {
    if (!std::isfinite(v) || v < 0.0) {
      fail(ErrorKind::InvalidConfig, "loss weights must be non-negative and finite");
    }
  }
  if (!(huber_delta > 0.0)) fail(ErrorKind::NonPositiveDelta, "huber_delta must be > 0");
}

std::string LossBreakdown::csv_header() {
  return "mse,perceptual,render,rot,trans,intr,cam,total";
}

std::string LossBreakdown::csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", mse,
                perceptual, render, rot, trans, intr, cam, total);
  return buf;
}

double huber(const Eigen::VectorXd& residual, double delta) {
  if (!(delta > 0.0)) fail(ErrorKind::NonPositiveDelta, "huber delta must be > 0");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    const double a = std::abs(residual[i]);
    sum += (a <= delta) ? 0.5 * residual[i] * residual[i] : delta * (a - 0.5 * delta);
  }
  return sum;
}

Eigen::VectorXd huber_gradient(const Eigen::VectorXd& residual, double delta) {
  if (!(delta > 0.0)) fail(ErrorKind::NonPositiveDelta, "huber delta must be > 0");
  Eigen::VectorXd g(residual.size());
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    const double r = residual[i];
    g[i] = (std::abs(r) <= delta) ? r : delta * (r > 0.0 ? 1.0 : -1.0);
  }
  return g;
}

double rotation_loss(const RelativePose& rel_pred, const RelativePose& rel_gt) {
  return rotation_geodesic_angle(rel_gt.rotation, rel_pred.rotation);
}

double translation_loss(const RelativePose& rel_pred, const RelativePose& rel_gt,
                        double delta) {
  return huber(rel_pred.translation - rel_gt.translation, delta);
}

double intrinsics_loss(const Intrinsics& k_pred, const Intrinsics& k_gt) {
  if (k_pred.width != k_gt.width || k_pred.height != k_gt.height) {
    fail(ErrorKind::ShapeMismatch, "intrinsics loss requires matching image dimensions");
  }
  const double w = k_pred.width, h = k_pred.height;
  const double dfx = (k_pred.fx - k_gt.fx) / w;
  const double dfy = (k_pred.fy - k_gt.fy) / h;
  const double dcx = (k_pred.cx - k_gt.cx) / w;
  const double dcy = (k_pred.cy - k_gt.cy) / h;
  return dfx * dfx + dfy * dfy + dcx * dcx + dcy * dcy;
}

namespace {

void check_pose_lists(const std::vector<CameraPose>& pred, const std::vector<CameraPose>& gt) {
  if (pred.size() != gt.size()) {
    fail(ErrorKind::LengthMismatch, "pred/gt pose lists differ in length");
  }
  if (pred.size() < 2) fail(ErrorKind::TooFewViews, "pairwise camera loss needs N >= 2");
}

}  // namespace

CameraLossParts camera_loss_parts(const std::vector<CameraPose>& pred,
                                  const std::vector<CameraPose>& gt, const LossWeights& w) {
  w.validate();
  check_pose_lists(pred, gt);
  const size_t n = pred.size();
  CameraLossParts parts;
  double pair_weighted = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const RelativePose rel_p = relative_pose(pred[i], pred[j]);
      const RelativePose rel_g = relative_pose(gt[i], gt[j]);
      const double lr = rotation_geodesic_angle(rel_g.rotation, rel_p.rotation);
      const double lt = huber(rel_p.translation - rel_g.translation, w.huber_delta);
      parts.rot += lr;
      parts.trans += lt;
      pair_weighted += w.lambda_R * lr + w.lambda_t * lt;
    }
  }
  const double n_pairs = static_cast<double>(n) * (n - 1);
  parts.rot /= n_pairs;
  parts.trans /= n_pairs;
  double intr_sum = 0.0;
  for (size_t j = 0; j < n; ++j) {
    intr_sum += intrinsics_loss(pred[j].intrinsics, gt[j].intrinsics);
  }
  parts.intr = intr_sum / static_cast<double>(n);
  parts.cam = pair_weighted / n_pairs + w.lambda_K * intr_sum / static_cast<double>(n);
  return parts;
}

double camera_loss(const std::vector<CameraPose>& pred, const std::vector<CameraPose>& gt,
                   const LossWeights& w) {
  return camera_loss_parts(pred, gt, w).cam;
}

CameraGrad& CameraGrad::operator+=(const CameraGrad& o) {
  omega += o.omega;
  dt += o.dt;
  dfx += o.dfx;
  dfy += o.dfy;
  dcx += o.dcx;
  dcy += o.dcy;
  return *this;
}

CameraGrad& CameraGrad::operator*=(double s) {
  omega *= s;
  dt *= s;
  dfx *= s;
  dfy *= s;
  dcx *= s;
  dcy *= s;
  return *this;
}

std::vector<CameraGrad> camera_loss_gradients(const std::vector<CameraPose>& pred,
                                              const std::vector<CameraPose>& gt,
                                              const LossWeights& w) {
  w.validate();
  check_pose_lists(pred, gt);
  const size_t n = pred.size();
  const double n_pairs = static_cast<double>(n) * (n - 1);
  const double coef_r = w.lambda_R / n_pairs;
  const double coef_t = w.lambda_t / n_pairs;
  std::vector<CameraGrad> grads(n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const Eigen::Matrix3d& ri = pred[i].rotation;
      const Eigen::Matrix3d& rj = pred[j].rotation;
      const Eigen::Vector3d ti = pred[i].translation;
      const Eigen::Vector3d tj = pred[j].translation;
      const Eigen::Matrix3d rel_r = ri.transpose() * rj;
      const Eigen::Vector3d rel_t = ri.transpose() * (tj - ti);
      const RelativePose rel_g = relative_pose(gt[i], gt[j]);

      // Rotation term: theta = arccos((tr(Rg^T Rp) - 1)/2).
      const double x = ((rel_g.rotation.transpose() * rel_r).trace() - 1.0) / 2.0;
      if (std::abs(x) < 1.0) {
        const double dtheta_dx = -1.0 / std::sqrt(1.0 - x * x);
        // dL/dRp for this pair, including the aggregation weight.
        const Eigen::Matrix3d g_rel = (coef_r * dtheta_dx * 0.5) * rel_g.rotation;
        // Perturbations: dRp = Ri^T (-skew(w_i) + skew(w_j)) Rj.
        const Eigen::Matrix3d f = ri * g_rel * rj.transpose();
        const Eigen::Vector3d c = skew_contract(f);
        grads[j].omega += c;
        grads[i].omega -= c;
      }

      // Translation term: Huber on rel_t - rel_t_gt.
      const Eigen::Vector3d hub =
          huber_gradient(rel_t - rel_g.translation, w.huber_delta) * coef_t;
      const Eigen::Vector3d ri_hub = ri * hub;
      grads[j].dt += ri_hub;
      grads[i].dt -= ri_hub;
      // d rel_t / d omega_i = Ri^T skew(tj - ti).
      const Eigen::Matrix3d m = ri.transpose() * skew(tj - ti);
      grads[i].omega += m.transpose() * hub;
    }
  }
  const double coef_k = w.lambda_K / static_cast<double>(n);
  for (size_t j = 0; j < n; ++j) {
    const Intrinsics& kp = pred[j].intrinsics;
    const Intrinsics& kg = gt[j].intrinsics;
    if (kp.width != kg.width || kp.height != kg.height) {
      fail(ErrorKind::ShapeMismatch, "intrinsics loss requires matching image dimensions");
    }
    const double wd = kp.width, ht = kp.height;
    grads[j].dfx += coef_k * 2.0 * (kp.fx - kg.fx) / (wd * wd);
    grads[j].dfy += coef_k * 2.0 * (kp.fy - kg.fy) / (ht * ht);
    grads[j].dcx += coef_k * 2.0 * (kp.cx - kg.cx) / (wd * wd);
    grads[j].dcy += coef_k * 2.0 * (kp.cy - kg.cy) / (ht * ht);
  }
  return grads;
}

namespace {

void check_same_shape(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) fail(ErrorKind::ShapeMismatch, "image dimensions disagree");
}

}  // namespace

double perceptual_proxy(const ImageBuffer& a, const ImageBuffer& b) {
  check_same_shape(a, b);
  const int w = a.width, h = a.height;
  double sum = 0.0;
  long count = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double da = static_cast<double>(a.at(y, x + 1, c)) - a.at(y, x, c);
        const double db = static_cast<double>(b.at(y, x + 1, c)) - b.at(y, x, c);
        sum += (da - db) * (da - db);
        ++count;
      }
    }
  }
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double da = static_cast<double>(a.at(y + 1, x, c)) - a.at(y, x, c);
        const double db = static_cast<double>(b.at(y + 1, x, c)) - b.at(y, x, c);
        sum += (da - db) * (da - db);
        ++count;
      }
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

RenderLossParts render_loss(const ImageBuffer& rendered, const ImageBuffer& target,
                            const LossWeights& w) {
  w.validate();
  check_same_shape(rendered, target);
  RenderLossParts parts;
  double sum = 0.0;
  for (size_t i = 0; i < rendered.rgb.size(); ++i) {
    const double d = static_cast<double>(rendered.rgb[i]) - target.rgb[i];
    sum += d * d;
  }
  parts.mse = sum / static_cast<double>(rendered.rgb.size());
  parts.perceptual_proxy = perceptual_proxy(rendered, target);
  parts.combined = parts.mse + w.lambda_perc * parts.perceptual_proxy;
  return parts;
}

LossBreakdown total_loss(const std::vector<ImageBuffer>& rendered,
                         const std::vector<ImageBuffer>& targets,
                         const std::vector<CameraPose>& pred_poses,
                         const std::vector<CameraPose>& gt_poses, const LossWeights& w) {
  w.validate();
  if (rendered.size() != targets.size()) {
    fail(ErrorKind::LengthMismatch, "rendered/target lists differ in length");
  }
  if (rendered.empty()) fail(ErrorKind::EmptyInput, "total_loss needs at least one target");
  LossBreakdown out;
  for (size_t i = 0; i < rendered.size(); ++i) {
    const RenderLossParts parts = render_loss(rendered[i], targets[i], w);
    out.mse += parts.mse;
    out.perceptual += parts.perceptual_proxy;
    out.render += parts.combined;
  }
  const double nt = static_cast<double>(rendered.size());
  out.mse /= nt;
  out.perceptual /= nt;
  out.render /= nt;
  if (!pred_poses.empty() || !gt_poses.empty()) {
    const CameraLossParts cam = camera_loss_parts(pred_poses, gt_poses, w);
    out.rot = cam.rot;
    out.trans = cam.trans;
    out.intr = cam.intr;
    out.cam = cam.cam;
  }
  out.total = out.render + out.cam;
  return out;
}

}  // namespace splatlab
