#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "splatlab/error.hpp"
#include "splatlab/losses.hpp"
#include "splatlab/rng.hpp"
#include "splatlab/so3.hpp"
#include "test_util.hpp"

using namespace splatlab;

namespace {

CameraPose posed(const Eigen::Matrix3d& r, const Eigen::Vector3d& t, double fx = 100,
                 double fy = 100, double cx = 50, double cy = 50, int w = 100, int h = 100) {
  CameraPose p;
  p.rotation = r;
  p.translation = t;
  p.intrinsics = {fx, fy, cx, cy, w, h};
  return p;
}

// Independent quaternion-based geodesic oracle: 2 * acos(|<q1, q2>|).
double quaternion_angle(const Eigen::Matrix3d& r1, const Eigen::Matrix3d& r2) {
  Eigen::Vector4d q1 = mat_to_quat(r1);
  Eigen::Vector4d q2 = mat_to_quat(r2);
  double dot = std::min(1.0, std::abs(q1.dot(q2)));
  return 2.0 * std::acos(dot);
}

std::vector<CameraPose> random_pose_list(Rng& rng, int n) {
  std::vector<CameraPose> out;
  for (int i = 0; i < n; ++i) out.push_back(testutil::random_pose(rng));
  return out;
}

}  // namespace

TEST_CASE("default loss weights carry the pinned values") {
  LossWeights w;
  CHECK(w.lambda_perc == 0.5);
  CHECK(w.lambda_R == 0.1);
  CHECK(w.lambda_t == 10.0);
  CHECK(w.lambda_K == 0.5);
  CHECK(w.huber_delta == 1.0);
  CHECK_NOTHROW(w.validate());
  LossWeights bad = w;
  bad.huber_delta = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = w;
  bad.lambda_R = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("huber hits the quadratic and linear closed forms") {
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK(huber(zero, 1.0) == 0.0);
  Eigen::Vector3d small(0.5, 0, 0);
  CHECK(huber(small, 1.0) == doctest::Approx(0.125).epsilon(1e-15));
  Eigen::Vector3d large(3.0, 0, 0);
  CHECK(huber(large, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
  Eigen::Vector3d mixed(3.0, 4.0, 0.0);
  CHECK(huber(mixed, 1.0) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK_THROWS_AS(huber(small, 0.0), Error);
  try {
    huber(small, -1.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveDelta);
  }
}

TEST_CASE("huber gradient matches finite differences and saturates at delta") {
  Rng rng(71);
  const double delta = 0.8;
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd r(4);
    for (int i = 0; i < 4; ++i) r[i] = 3.0 * rng.normal();
    Eigen::VectorXd g = huber_gradient(r, delta);
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(g[i]) <= delta + 1e-15);
      Eigen::VectorXd plus = r, minus = r;
      plus[i] += 1e-6;
      minus[i] -= 1e-6;
      double fd = (huber(plus, delta) - huber(minus, delta)) / 2e-6;
      CHECK(std::abs(g[i] - fd) < 1e-6);
    }
  }
}

TEST_CASE("rotation loss agrees with an independent quaternion oracle") {
  RelativePose id;
  CHECK(rotation_loss(id, id) == 0.0);
  RelativePose quarter;
  quarter.rotation = testutil::rot_z(M_PI / 2);
  CHECK(rotation_loss(quarter, id) == doctest::Approx(M_PI / 2).epsilon(1e-12));

  Rng rng(72);
  for (int i = 0; i < 100; ++i) {
    RelativePose a, b;
    a.rotation = testutil::random_rotation(rng);
    b.rotation = testutil::random_rotation(rng);
    CHECK(std::abs(rotation_loss(a, b) - quaternion_angle(a.rotation, b.rotation)) < 1e-9);
  }
}

TEST_CASE("translation loss is the huber norm of the relative difference") {
  RelativePose pred, gt;
  pred.translation = Eigen::Vector3d(3, 4, 0);
  CHECK(translation_loss(pred, gt, 1.0) == doctest::Approx(6.0).epsilon(1e-15));
  pred.translation = Eigen::Vector3d(0.5, 0, 0);
  CHECK(translation_loss(pred, gt, 1.0) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("intrinsics loss normalizes by image dimensions") {
  Intrinsics a{100, 100, 50, 50, 100, 100};
  Intrinsics b = a;
  CHECK(intrinsics_loss(a, b) == 0.0);
  b.fx = 110.0;  // difference of 0.1 * width
  CHECK(intrinsics_loss(a, b) == doctest::Approx(0.01).epsilon(1e-12));
  Intrinsics c = a;
  c.width = 200;
  CHECK_THROWS_AS(intrinsics_loss(a, c), Error);
  try {
    intrinsics_loss(a, c);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
  }
}

TEST_CASE("camera loss composes the documented two-view closed form") {
  std::vector<CameraPose> gt{posed(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero()),
                             posed(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero())};
  std::vector<CameraPose> pred{
      posed(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero()),
      posed(testutil::rot_z(M_PI / 2), Eigen::Vector3d(0.5, 0, 0))};
  LossWeights w;
  // both ordered pairs contribute L_R = pi/2 and L_t = huber(0.5-residual) = 0.125
  double expected = w.lambda_R * (M_PI / 2) + w.lambda_t * 0.125;
  CHECK(camera_loss(pred, gt, w) == doctest::Approx(expected).epsilon(1e-12));
  CameraLossParts parts = camera_loss_parts(pred, gt, w);
  CHECK(parts.cam == doctest::Approx(expected).epsilon(1e-12));
  CHECK(parts.rot == doctest::Approx(M_PI / 2).epsilon(1e-12));
  CHECK(parts.trans == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(parts.intr == 0.0);
}

TEST_CASE("camera loss vanishes when predictions equal ground truth") {
  Rng rng(73);
  std::vector<CameraPose> poses = random_pose_list(rng, 4);
  CHECK(camera_loss(poses, poses, LossWeights{}) < 1e-14);
}

TEST_CASE("camera loss matches a literal re-summation on random lists") {
  Rng rng(74);
  LossWeights w;
  for (int trial = 0; trial < 10; ++trial) {
    int n = 2 + static_cast<int>(rng.integer(4));
    std::vector<CameraPose> pred = random_pose_list(rng, n);
    std::vector<CameraPose> gt = random_pose_list(rng, n);
    for (int i = 0; i < n; ++i) {
      gt[i].intrinsics.width = pred[i].intrinsics.width;
      gt[i].intrinsics.height = pred[i].intrinsics.height;
    }
    double pair_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        RelativePose rp = relative_pose(pred[i], pred[j]);
        RelativePose rg = relative_pose(gt[i], gt[j]);
        pair_sum += w.lambda_R * rotation_loss(rp, rg) +
                    w.lambda_t * translation_loss(rp, rg, w.huber_delta);
      }
    }
    double intr_sum = 0.0;
    for (int i = 0; i < n; ++i) intr_sum += intrinsics_loss(pred[i].intrinsics, gt[i].intrinsics);
    double expected = pair_sum / (n * (n - 1.0)) + w.lambda_K / n * intr_sum;
    CHECK(camera_loss(pred, gt, w) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("camera loss is invariant to a common left-applied rigid transform") {
  Rng rng(75);
  LossWeights w;
  std::vector<CameraPose> pred = random_pose_list(rng, 3);
  std::vector<CameraPose> gt = random_pose_list(rng, 3);
  for (int i = 0; i < 3; ++i) gt[i].intrinsics = pred[i].intrinsics;
  const double base = camera_loss(pred, gt, w);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Matrix3d g_rot = testutil::random_rotation(rng);
    Eigen::Vector3d g_t(rng.normal(), rng.normal(), rng.normal());
    double both = camera_loss(testutil::apply_gauge(pred, g_rot, g_t),
                              testutil::apply_gauge(gt, g_rot, g_t), w);
    CHECK(std::abs(both - base) < 1e-10);
    // gauging only the predictions equals un-gauging only the ground truth
    Eigen::Matrix3d g_inv = g_rot.transpose();
    Eigen::Vector3d g_inv_t = -g_inv * g_t;
    double pred_only = camera_loss(testutil::apply_gauge(pred, g_rot, g_t), gt, w);
    double gt_only = camera_loss(pred, testutil::apply_gauge(gt, g_inv, g_inv_t), w);
    CHECK(std::abs(pred_only - gt_only) < 1e-10);
  }
}

TEST_CASE("camera loss rejects too-short and mismatched lists") {
  Rng rng(76);
  std::vector<CameraPose> one = random_pose_list(rng, 1);
  CHECK_THROWS_AS(camera_loss(one, one, LossWeights{}), Error);
  std::vector<CameraPose> two = random_pose_list(rng, 2);
  std::vector<CameraPose> three = random_pose_list(rng, 3);
  CHECK_THROWS_AS(camera_loss(two, three, LossWeights{}), Error);
}

TEST_CASE("camera gradients match central finite differences away from zero angle") {
  Rng rng(77);
  LossWeights w;
  std::vector<CameraPose> pred = random_pose_list(rng, 3);
  std::vector<CameraPose> gt = random_pose_list(rng, 3);
  for (int i = 0; i < 3; ++i) {
    gt[i].intrinsics.width = pred[i].intrinsics.width;
    gt[i].intrinsics.height = pred[i].intrinsics.height;
  }
  std::vector<CameraGrad> grads = camera_loss_gradients(pred, gt, w);
  REQUIRE(grads.size() == 3);
  // step chosen so central-difference roundoff (~eps/2h) stays well under the
  // 1e-6 relative gate while truncation (~h^2) is still negligible
  const double h = 1e-5;
  for (size_t k = 0; k < pred.size(); ++k) {
    for (int a = 0; a < 3; ++a) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e[a] = h;
      auto plus = pred, minus = pred;
      plus[k].rotation = exp_so3(e) * pred[k].rotation;
      minus[k].rotation = exp_so3(-e) * pred[k].rotation;
      double fd = (camera_loss(plus, gt, w) - camera_loss(minus, gt, w)) / (2 * h);
      CHECK(testutil::rel_error(grads[k].omega[a], fd, 1e-3) < 1e-6);

      plus = minus = pred;
      plus[k].translation[a] += h;
      minus[k].translation[a] -= h;
      fd = (camera_loss(plus, gt, w) - camera_loss(minus, gt, w)) / (2 * h);
      CHECK(testutil::rel_error(grads[k].dt[a], fd, 1e-3) < 1e-6);
    }
    auto fd_intr = [&](double Intrinsics::*field, double analytic) {
      auto plus = pred, minus = pred;
      plus[k].intrinsics.*field += h;
      minus[k].intrinsics.*field -= h;
      double fd = (camera_loss(plus, gt, w) - camera_loss(minus, gt, w)) / (2 * h);
      CHECK(testutil::rel_error(analytic, fd, 1e-3) < 1e-6);
    };
    fd_intr(&Intrinsics::fx, grads[k].dfx);
    fd_intr(&Intrinsics::fy, grads[k].dfy);
    fd_intr(&Intrinsics::cx, grads[k].dcx);
    fd_intr(&Intrinsics::cy, grads[k].dcy);
  }
}

TEST_CASE("perceptual proxy matches a hand-computed gradient-map case") {
  ImageBuffer a(2, 2);
  ImageBuffer b(2, 2);
  b.at(0, 0, 0) = 1.0;
  // one horizontal and one vertical gradient entry differ by 1 each,
  // averaged over 3 * (2 + 2) = 12 entries
  CHECK(perceptual_proxy(a, b) == doctest::Approx(2.0 / 12.0).epsilon(1e-15));
  CHECK(perceptual_proxy(a, a) == 0.0);
  // constant offsets have identical gradient maps
  ImageBuffer c = a;
  for (double& v : c.rgb) v += 0.37;
  CHECK(perceptual_proxy(a, c) == 0.0);
}

TEST_CASE("render loss reproduces the constant-offset closed form") {
  Rng rng(78);
  ImageBuffer target = testutil::random_image(rng, 8, 6);
  RenderLossParts same = render_loss(target, target, LossWeights{});
  CHECK(same.mse == 0.0);
  CHECK(same.perceptual_proxy == 0.0);
  CHECK(same.combined == 0.0);

  ImageBuffer offset = target;
  for (double& v : offset.rgb) v += 0.1;
  RenderLossParts parts = render_loss(offset, target, LossWeights{});
  CHECK(parts.mse == doctest::Approx(0.01).epsilon(1e-12));
  // the offset shifts both gradient maps identically up to rounding
  CHECK(parts.perceptual_proxy < 1e-30);
  CHECK(parts.combined == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("render loss mse matches a literal double loop") {
  Rng rng(79);
  ImageBuffer a = testutil::random_image(rng, 7, 5);
  ImageBuffer b = testutil::random_image(rng, 7, 5);
  double sum = 0.0;
  for (size_t i = 0; i < a.rgb.size(); ++i) sum += (a.rgb[i] - b.rgb[i]) * (a.rgb[i] - b.rgb[i]);
  RenderLossParts parts = render_loss(a, b, LossWeights{});
  CHECK(parts.mse == doctest::Approx(sum / a.rgb.size()).epsilon(1e-12));
  CHECK(parts.combined ==
        doctest::Approx(parts.mse + 0.5 * parts.perceptual_proxy).epsilon(1e-12));
}

TEST_CASE("total loss averages render terms and adds camera supervision") {
  Rng rng(80);
  ImageBuffer t0 = testutil::random_image(rng, 6, 6);
  ImageBuffer t1 = testutil::random_image(rng, 6, 6);
  ImageBuffer r1 = t1;
  for (double& v : r1.rgb) v += 0.05;

  LossWeights w;
  LossBreakdown perfect = total_loss({t0, t1}, {t0, t1}, {}, {}, w);
  CHECK(perfect.total == 0.0);
  CHECK(perfect.cam == 0.0);

  LossBreakdown one_off = total_loss({t0, r1}, {t0, t1}, {}, {}, w);
  RenderLossParts solo = render_loss(r1, t1, w);
  CHECK(one_off.render == doctest::Approx(0.5 * solo.combined).epsilon(1e-12));
  CHECK(one_off.mse == doctest::Approx(0.5 * solo.mse).epsilon(1e-12));
  CHECK(one_off.total == doctest::Approx(one_off.render).epsilon(1e-12));

  std::vector<CameraPose> pred = random_pose_list(rng, 3);
  std::vector<CameraPose> gt = random_pose_list(rng, 3);
  for (int i = 0; i < 3; ++i) gt[i].intrinsics = pred[i].intrinsics;
  LossBreakdown full = total_loss({t0, r1}, {t0, t1}, pred, gt, w);
  CameraLossParts cam = camera_loss_parts(pred, gt, w);
  CHECK(full.cam == doctest::Approx(cam.cam).epsilon(1e-12));
  CHECK(full.rot == doctest::Approx(cam.rot).epsilon(1e-12));
  CHECK(full.trans == doctest::Approx(cam.trans).epsilon(1e-12));
  CHECK(full.intr == doctest::Approx(cam.intr).epsilon(1e-12));
  CHECK(full.total == doctest::Approx(full.render + full.cam).epsilon(1e-12));
}

TEST_CASE("total loss validates list lengths") {
  Rng rng(81);
  ImageBuffer img = testutil::random_image(rng, 4, 4);
  CHECK_THROWS_AS(total_loss({img}, {}, {}, {}, LossWeights{}), Error);
  std::vector<CameraPose> two = random_pose_list(rng, 2);
  std::vector<CameraPose> three = random_pose_list(rng, 3);
  CHECK_THROWS_AS(total_loss({img}, {img}, two, three, LossWeights{}), Error);
}

TEST_CASE("loss breakdown csv names every column in order") {
  CHECK(LossBreakdown::csv_header() == "mse,perceptual,render,rot,trans,intr,cam,total");
  LossBreakdown b;
  b.mse = 1.0;
  b.total = 2.0;
  std::string row = b.csv_row();
  CHECK(row.substr(0, 2) == "1,");
  CHECK(row.find(",2") != std::string::npos);
}
