// Acceptance checks for the whole artifact: ten end-to-end criteria, one
// printed PASS/FAIL line each. The process exit code is the number of failed
// criteria, so `ctest` treats any failure as a test failure. Tolerances are
// pinned here on purpose; loosening them is a behavior change, not a tweak.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "splatlab/bench.hpp"
#include "splatlab/camera.hpp"
#include "splatlab/error.hpp"
#include "splatlab/experts.hpp"
#include "splatlab/gaussian.hpp"
#include "splatlab/image.hpp"
#include "splatlab/losses.hpp"
#include "splatlab/metrics.hpp"
#include "splatlab/optim.hpp"
#include "splatlab/renderer.hpp"
#include "splatlab/rng.hpp"
#include "splatlab/so3.hpp"
#include "test_util.hpp"

using namespace splatlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// 1. Tile renderer vs exhaustive reference renderer.
// ---------------------------------------------------------------------------

Outcome check_renderer_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int s = 0; s < 50; ++s) {
    Rng rng(9000 + s);
    CameraPose cam;
    cam.intrinsics = {60.0, 60.0, 32.0, 32.0, 64, 64};

    GaussianScene scene;
    scene.background_color = Eigen::Vector3f(static_cast<float>(rng.uniform()),
                                             static_cast<float>(rng.uniform()),
                                             static_cast<float>(rng.uniform()));
    for (int i = 0; i < 500; ++i) {
      Gaussian g;
      const double z = 1.5 + 3.0 * rng.uniform();
      g.mean = Eigen::Vector3f(static_cast<float>(0.8 * rng.normal()),
                               static_cast<float>(0.8 * rng.normal()),
                               static_cast<float>(z));
      for (int a = 0; a < 3; ++a) {
        g.log_scale[a] = static_cast<float>(std::log(0.02 + 0.2 * rng.uniform()));
      }
      g.rotation_q = rng.unit_quaternion().cast<float>();
      g.opacity_logit = static_cast<float>(-1.0 + 3.0 * rng.uniform());
      for (int c = 0; c < 3; ++c) g.color[c] = static_cast<float>(rng.uniform());
      scene.gaussians.push_back(g);
      scene.source_view.push_back(-1);
    }

    const ImageBuffer tiled = render(scene, cam, RenderConfig{});
    const ImageBuffer reference = render_reference(scene, cam, RenderConfig{});
    for (size_t i = 0; i < tiled.rgb.size(); ++i) {
      worst = std::max(worst, std::abs(tiled.rgb[i] - reference.rgb[i]));
    }
  }
  const double secs = seconds_since(t0);
  Outcome out;
  out.pass = worst < 1e-5 && secs < 60.0;
  out.detail = fmt("max |tile - reference| = %.3g over 50 seeded 64x64 scenes of 500"
                   " Gaussians (limit 1e-5), %.1f s (limit 60)",
                   worst, secs);
  return out;
}

// ---------------------------------------------------------------------------
// 2. Analytic gradients vs central finite differences.
// ---------------------------------------------------------------------------

constexpr int kAttrCount = 14;  // 3 mean + 3 log_scale + 4 rotation + 1 opacity + 3 color

float get_attribute(const Gaussian& g, int idx) {
  if (idx < 3) return g.mean[idx];
  if (idx < 6) return g.log_scale[idx - 3];
  if (idx < 10) return g.rotation_q[idx - 6];
  if (idx == 10) return g.opacity_logit;
  return g.color[idx - 11];
}

void set_attribute(Gaussian& g, int idx, float v) {
  if (idx < 3) {
    g.mean[idx] = v;
  } else if (idx < 6) {
    g.log_scale[idx - 3] = v;
  } else if (idx < 10) {
    g.rotation_q[idx - 6] = v;
  } else if (idx == 10) {
    g.opacity_logit = v;
  } else {
    g.color[idx - 11] = v;
  }
}

double attribute_grad(const GaussianGrad& g, int idx) {
  if (idx < 3) return g.mean[idx];
  if (idx < 6) return g.log_scale[idx - 3];
  if (idx < 10) return g.rotation_q[idx - 6];
  if (idx == 10) return g.opacity_logit;
  return g.color[idx - 11];
}

double loss_of(const GaussianScene& scene, const CameraPose& pose, const ImageBuffer& target,
               const LossWeights& w) {
  return render_with_gradients(scene, pose, target, w).first.combined;
}

// Worst relative FD error over every Gaussian attribute and camera parameter
// of one configuration. Relative error uses a 1e-6 floor so exactly-zero
// analytic/numeric pairs count as perfect agreement.
double gradcheck_worst(const GaussianScene& scene, const CameraPose& pose,
                       const ImageBuffer& target) {
  const LossWeights w;
  const auto [loss, bundle] = render_with_gradients(scene, pose, target, w);
  (void)loss;
  double worst = 0.0;

  for (size_t gi = 0; gi < scene.gaussians.size(); ++gi) {
    for (int a = 0; a < kAttrCount; ++a) {
      const float base = get_attribute(scene.gaussians[gi], a);
      const float h = static_cast<float>(1e-5 * std::max(1.0, std::abs(double(base))));
      GaussianScene plus = scene, minus = scene;
      set_attribute(plus.gaussians[gi], a, base + h);
      set_attribute(minus.gaussians[gi], a, base - h);
      // the attribute lives in f32: divide by the exact representable step
      const double step = double(get_attribute(plus.gaussians[gi], a)) -
                          double(get_attribute(minus.gaussians[gi], a));
      const double fd = (loss_of(plus, pose, target, w) - loss_of(minus, pose, target, w)) / step;
      worst = std::max(worst,
                       testutil::rel_error(attribute_grad(bundle.d_gaussians[gi], a), fd));
    }
  }

  const double h = 1e-5;
  for (int a = 0; a < 3; ++a) {
    CameraPose plus = pose, minus = pose;
    Eigen::Vector3d axis = Eigen::Vector3d::Zero();
    axis[a] = h;
    plus.rotation = exp_so3(axis) * pose.rotation;
    minus.rotation = exp_so3(-axis) * pose.rotation;
    const double fd = (loss_of(scene, plus, target, w) - loss_of(scene, minus, target, w)) /
                      (2.0 * h);
    worst = std::max(worst, testutil::rel_error(bundle.d_camera.omega[a], fd));
  }
  for (int a = 0; a < 3; ++a) {
    CameraPose plus = pose, minus = pose;
    plus.translation[a] += h;
    minus.translation[a] -= h;
    const double fd = (loss_of(scene, plus, target, w) - loss_of(scene, minus, target, w)) /
                      (2.0 * h);
    worst = std::max(worst, testutil::rel_error(bundle.d_camera.dt[a], fd));
  }
  const auto check_intr = [&](double Intrinsics::*field, double analytic) {
    CameraPose plus = pose, minus = pose;
    const double step = 1e-5 * std::max(1.0, std::abs(pose.intrinsics.*field));
    plus.intrinsics.*field += step;
    minus.intrinsics.*field -= step;
    const double fd = (loss_of(scene, plus, target, w) - loss_of(scene, minus, target, w)) /
                      (2.0 * step);
    worst = std::max(worst, testutil::rel_error(analytic, fd));
  };
  check_intr(&Intrinsics::fx, bundle.d_camera.dfx);
  check_intr(&Intrinsics::fy, bundle.d_camera.dfy);
  check_intr(&Intrinsics::cx, bundle.d_camera.dcx);
  check_intr(&Intrinsics::cy, bundle.d_camera.dcy);
  return worst;
}

Gaussian random_gaussian_near_axis(Rng& rng) {
  Gaussian g;
  g.mean = Eigen::Vector3f(static_cast<float>(0.3 * rng.normal()),
                           static_cast<float>(0.3 * rng.normal()),
                           static_cast<float>(2.0 + rng.uniform()));
  for (int a = 0; a < 3; ++a) {
    g.log_scale[a] = static_cast<float>(std::log(0.1 + 0.3 * rng.uniform()));
  }
  g.rotation_q = rng.unit_quaternion().cast<float>();
  g.opacity_logit = static_cast<float>(-0.5 + 2.0 * rng.uniform());
  for (int c = 0; c < 3; ++c) g.color[c] = static_cast<float>(rng.uniform());
  return g;
}

CameraPose gradcheck_camera(Rng& rng) {
  CameraPose cam;
  cam.intrinsics = {14.0, 14.0, 8.0, 8.0, 16, 16};
  cam.rotation = exp_so3(Eigen::Vector3d(0.05 * rng.normal(), 0.05 * rng.normal(),
                                         0.05 * rng.normal()));
  cam.translation = Eigen::Vector3d(0.05 * rng.normal(), 0.05 * rng.normal(),
                                    0.05 * rng.normal());
  return cam;
}

Outcome check_gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {  // single-Gaussian configurations
    Rng rng(7000 + s);
    const CameraPose cam = gradcheck_camera(rng);
    GaussianScene scene;
    scene.background_color = Eigen::Vector3f(0.2f, 0.1f, 0.3f);
    scene.gaussians.push_back(random_gaussian_near_axis(rng));
    scene.source_view.push_back(-1);
    const ImageBuffer target = testutil::random_image(rng, 16, 16);
    worst = std::max(worst, gradcheck_worst(scene, cam, target));
  }
  for (int s = 0; s < 5; ++s) {  // overlapping multi-Gaussian configurations
    Rng rng(7500 + s);
    const CameraPose cam = gradcheck_camera(rng);
    GaussianScene scene;
    scene.background_color = Eigen::Vector3f(0.1f, 0.2f, 0.1f);
    for (int i = 0; i < 3; ++i) {
      Gaussian g = random_gaussian_near_axis(rng);
      g.mean[0] = static_cast<float>(0.2 * rng.normal());
      g.mean[1] = static_cast<float>(0.2 * rng.normal());
      g.log_scale += Eigen::Vector3f::Constant(0.7f);
      scene.gaussians.push_back(g);
      scene.source_view.push_back(-1);
    }
    const ImageBuffer target = testutil::random_image(rng, 16, 16);
    worst = std::max(worst, gradcheck_worst(scene, cam, target));
  }
  const double secs = seconds_since(t0);
  Outcome out;
  out.pass = worst < 1e-4 && secs < 300.0;
  out.detail = fmt("worst relative FD error %.3g over 20 single + 5 multi configurations,"
                   " all attributes and camera parameters (limit 1e-4), %.1f s (limit 300)",
                   worst, secs);
  return out;
}

// ---------------------------------------------------------------------------
// 3. Loss closed forms and gauge invariance.
// ---------------------------------------------------------------------------

CameraPose plain_pose(const Eigen::Matrix3d& r, const Eigen::Vector3d& t, double w = 100,
                      double h = 80) {
  CameraPose p;
  p.rotation = r;
  p.translation = t;
  p.intrinsics = {50.0, 50.0, w / 2, h / 2, static_cast<int>(w), static_cast<int>(h)};
  return p;
}

Outcome check_loss_identities() {
  double worst = 0.0;
  const auto track = [&](double got, double want) {
    worst = std::max(worst, std::abs(got - want));
  };

  // Huber closed forms (delta = 1): quadratic and linear branches.
  track(huber(Eigen::Vector3d(0, 0, 0), 1.0), 0.0);
  track(huber(Eigen::Vector3d(0.5, 0, 0), 1.0), 0.125);
  track(huber(Eigen::Vector3d(3, 0, 0), 1.0), 2.5);
  track(huber(Eigen::Vector3d(3, 4, 0), 1.0), 6.0);

  // Relative-pose losses.
  const CameraPose id_a = plain_pose(Eigen::Matrix3d::Identity(), {0, 0, 0});
  const CameraPose id_b = plain_pose(Eigen::Matrix3d::Identity(), {0, 0, 0});
  const RelativePose rel_id = relative_pose(id_a, id_b);
  track(rotation_loss(rel_id, rel_id), 0.0);
  RelativePose quarter = rel_id;
  quarter.rotation = testutil::rot_z(M_PI / 2) * rel_id.rotation;
  track(rotation_loss(quarter, rel_id), M_PI / 2);
  RelativePose shifted = rel_id;
  shifted.translation = Eigen::Vector3d(0.5, 0, 0);
  track(translation_loss(shifted, rel_id, 1.0), 0.125);
  shifted.translation = Eigen::Vector3d(3, 4, 0);
  track(translation_loss(shifted, rel_id, 1.0), 6.0);

  // Intrinsics closed form: fx off by 0.1 * width.
  Intrinsics ka = id_a.intrinsics, kb = id_a.intrinsics;
  track(intrinsics_loss(ka, kb), 0.0);
  ka.fx += 0.1 * ka.width;
  track(intrinsics_loss(ka, kb), 0.01);

  // Two-view camera loss: rotation quarter turn + translation (0.5, 0, 0).
  const LossWeights w;
  std::vector<CameraPose> gt{id_a, id_b};
  std::vector<CameraPose> pred{id_a,
                               plain_pose(testutil::rot_z(M_PI / 2), {0.5, 0, 0})};
  track(camera_loss(gt, gt, w), 0.0);
  track(camera_loss(pred, gt, w), w.lambda_R * (M_PI / 2) + w.lambda_t * 0.125);

  // Render loss closed forms.
  Rng rng(41);
  const ImageBuffer target = testutil::random_image(rng, 8, 6);
  const RenderLossParts zero = render_loss(target, target, w);
  track(zero.mse, 0.0);
  track(zero.perceptual_proxy, 0.0);
  ImageBuffer offset = target;
  for (double& v : offset.rgb) v += 0.1;
  const RenderLossParts shifted_parts = render_loss(offset, target, w);
  track(shifted_parts.mse, 0.01);
  track(shifted_parts.perceptual_proxy, 0.0);

  // Total objective: perfect inputs -> 0; one imperfect render of two -> half
  // of its solo render loss.
  const std::vector<ImageBuffer> perfect{target, target};
  const LossBreakdown all_zero = total_loss(perfect, perfect, gt, gt, w);
  track(all_zero.total, 0.0);
  const std::vector<ImageBuffer> mixed{target, offset};
  const LossBreakdown half = total_loss(mixed, perfect, {}, {}, w);
  track(half.render, 0.5 * render_loss(offset, target, w).combined);

  const bool identities_ok = worst < 1e-9;

  // Gauge invariance of the camera loss under 100 rigid transforms.
  Rng grng(42);
  std::vector<CameraPose> gauge_gt, gauge_pred;
  for (int i = 0; i < 4; ++i) {
    CameraPose p = testutil::random_pose(grng);
    gauge_gt.push_back(p);
    p.rotation = exp_so3(Eigen::Vector3d(0.02 * grng.normal(), 0.02 * grng.normal(),
                                         0.02 * grng.normal())) *
                 p.rotation;
    p.translation += Eigen::Vector3d(0.05 * grng.normal(), 0.05 * grng.normal(),
                                     0.05 * grng.normal());
    gauge_pred.push_back(p);
  }
  const double base = camera_loss(gauge_pred, gauge_gt, w);
  double worst_gauge = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Matrix3d g_rot = testutil::random_rotation(grng);
    const Eigen::Vector3d g_t(grng.normal(), grng.normal(), grng.normal());
    const double both = camera_loss(testutil::apply_gauge(gauge_pred, g_rot, g_t),
                                    testutil::apply_gauge(gauge_gt, g_rot, g_t), w);
    worst_gauge = std::max(worst_gauge, std::abs(both - base));
  }
  const bool gauge_ok = worst_gauge < 1e-10;

  Outcome out;
  out.pass = identities_ok && gauge_ok;
  out.detail = fmt("worst closed-form deviation %.3g (limit 1e-9); worst gauge deviation"
                   " %.3g over 100 rigid transforms (limit 1e-10)",
                   worst, worst_gauge);
  return out;
}

// ---------------------------------------------------------------------------
// 4. Default loss weights.
// ---------------------------------------------------------------------------

Outcome check_default_weights() {
  const LossWeights w;
  Outcome out;
  out.pass = w.lambda_perc == 0.5 && w.lambda_R == 0.1 && w.lambda_t == 10.0 &&
             w.lambda_K == 0.5;
  out.detail = fmt("defaults lambda_perc=%g lambda_R=%g lambda_t=%g lambda_K=%g"
                   " (want 0.5 / 0.1 / 10 / 0.5, exact)",
                   w.lambda_perc, w.lambda_R, w.lambda_t, w.lambda_K);
  return out;
}

// ---------------------------------------------------------------------------
// 5. Pose alignment recovers from 2 deg rotation + 2% translation noise.
// ---------------------------------------------------------------------------

Outcome check_epa_recovery() {
  SyntheticSceneSpec spec;
  spec.seed = 11;
  spec.gaussian_count = 150;
  spec.camera_count = 20;
  spec.image_width = 32;
  spec.image_height = 32;
  const SyntheticScene synth = make_synthetic_scene(spec);

  int successes = 0;
  std::vector<double> gains;
  for (int k = 0; k < 20; ++k) {
    const int idx = k % spec.camera_count;
    const CameraPose& truth = synth.cameras[idx];
    const ImageBuffer& oracle = synth.images[idx];

    GeometryExpertSpec geo;
    geo.kind = GeometryExpertKind::kNoisyOracle;
    geo.noise.rot_deg_sigma = 2.0;
    geo.noise.trans_rel_sigma = 0.02;
    geo.noise.seed = 1000 + k;
    const CameraPose noisy = estimate_poses(geo, {}, {truth})[0];

    const double psnr_before = psnr(render(synth.scene, noisy, RenderConfig{}), oracle);
    const double rot_before = rotation_geodesic_angle(noisy.rotation, truth.rotation);

    const EpaConfig cfg;  // defaults: 100 iterations of Adam at lr 1e-4
    const EpaResult aligned = align_poses_epa(synth.scene, {noisy}, {oracle}, cfg);
    const CameraPose& refined = aligned.poses[0];
    const double psnr_after = psnr(render(synth.scene, refined, RenderConfig{}), oracle);
    const double rot_after = rotation_geodesic_angle(refined.rotation, truth.rotation);

    gains.push_back(psnr_after - psnr_before);
    if (rot_after < rot_before && psnr_after - psnr_before >= 1.0) ++successes;
  }
  Outcome out;
  out.pass = successes >= 18;
  out.detail = fmt("rotation error reduced AND PSNR gained >= 1 dB in %d/20 seeds"
                   " (need 18); median gain %.2f dB",
                   successes, median(gains));
  return out;
}

// ---------------------------------------------------------------------------
// 6. Pipeline bypass equivalence and noise monotonicity.
// ---------------------------------------------------------------------------

Outcome check_pipeline_properties() {
  SyntheticSceneSpec spec;
  spec.seed = 6;
  spec.gaussian_count = 80;
  spec.camera_count = 8;
  spec.image_width = 24;
  spec.image_height = 24;
  const SyntheticScene synth = make_synthetic_scene(spec);

  const int n_ctx = 2;
  const std::vector<ImageBuffer> images{synth.images[0], synth.images[1], synth.images[2]};
  const std::vector<CameraPose> gt{synth.cameras[0], synth.cameras[1], synth.cameras[2]};
  const std::vector<DepthMap> depths{synth.depths[0], synth.depths[1]};

  AppearanceExpertSpec app;
  app.kind = AppearanceExpertKind::kFitting;
  app.fitting.iterations = 0;
  app.fitting.init.opacity_logit = 2.0f;

  // Bypass: the posed protocol must equal pose-free with all sigmas zero,
  // bit for bit, in every numeric output.
  GeometryExpertSpec zero_noise;
  zero_noise.kind = GeometryExpertKind::kNoisyOracle;
  zero_noise.noise.seed = 5;
  const PipelineResult posed =
      run_pipeline(GeometryExpertSpec{}, app, images, n_ctx, Protocol::kPosed, gt, depths);
  const PipelineResult bypass =
      run_pipeline(zero_noise, app, images, n_ctx, Protocol::kPoseFree, gt, depths);
  bool bypass_ok = testutil::scene_bits_equal(posed.scene, bypass.scene) &&
                   posed.poses.size() == bypass.poses.size();
  for (size_t i = 0; bypass_ok && i < posed.poses.size(); ++i) {
    bypass_ok = testutil::pose_bits_equal(posed.poses[i], bypass.poses[i]);
  }

  // Noise monotonicity: median held-out PSNR over 20 seeds must not increase
  // with the rotation-noise level.
  const std::vector<double> sigmas{0.0, 1.0, 2.0, 5.0};
  std::vector<double> medians;
  for (double sigma : sigmas) {
    std::vector<double> values;
    for (int k = 0; k < 20; ++k) {
      GeometryExpertSpec geo;
      geo.kind = GeometryExpertKind::kNoisyOracle;
      geo.noise.rot_deg_sigma = sigma;
      geo.noise.seed = 4000 + k;
      const PipelineResult run =
          run_pipeline(geo, app, images, n_ctx, Protocol::kPoseFree, gt, depths);
      const ImageBuffer rendered = render(run.scene, run.poses[2], RenderConfig{});
      values.push_back(psnr(rendered, images[2]));
    }
    medians.push_back(median(values));
  }
  bool monotone = true;
  for (size_t i = 1; i < medians.size(); ++i) {
    if (medians[i] > medians[i - 1]) monotone = false;
  }

  Outcome out;
  out.pass = bypass_ok && monotone;
  out.detail = fmt("bypass bit-identical: %s; median held-out PSNR over rot sigma"
                   " {0,1,2,5} deg = {%.2f, %.2f, %.2f, %.2f} dB, 20 seeds each"
                   " (must be non-increasing)",
                   bypass_ok ? "yes" : "NO", medians[0], medians[1], medians[2], medians[3]);
  return out;
}

// ---------------------------------------------------------------------------
// 7. Pose AUC worked examples and pairwise-error gauge invariance.
// ---------------------------------------------------------------------------

Outcome check_pose_auc() {
  double worst = 0.0;
  worst = std::max(worst, std::abs(pose_auc({0.0, 0.0, 0.0}, {5.0})[0] - 1.0));
  worst = std::max(worst, std::abs(pose_auc({2.5}, {5.0})[0] - 0.5));
  // errors {2, 8, 30} at tau 10: the cumulative-fraction step curve integrates
  // to (2/10)*(0) + ... = exactly 1/3 of the area below tau
  worst = std::max(worst, std::abs(pose_auc({2.0, 8.0, 30.0}, {10.0})[0] - 1.0 / 3.0));
  const bool examples_ok = worst < 1e-12;

  Rng rng(77);
  std::vector<CameraPose> gt, pred;
  for (int i = 0; i < 4; ++i) {
    CameraPose p = testutil::random_pose(rng);
    gt.push_back(p);
    p.rotation = exp_so3(Eigen::Vector3d(0.03 * rng.normal(), 0.03 * rng.normal(),
                                         0.03 * rng.normal())) *
                 p.rotation;
    p.translation += Eigen::Vector3d(0.05 * rng.normal(), 0.05 * rng.normal(),
                                     0.05 * rng.normal());
    pred.push_back(p);
  }
  const std::vector<PoseErrorSample> base = pairwise_pose_errors(pred, gt);
  double worst_gauge = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Matrix3d g_rot = testutil::random_rotation(rng);
    const Eigen::Vector3d g_t(rng.normal(), rng.normal(), rng.normal());
    const std::vector<PoseErrorSample> gauged =
        pairwise_pose_errors(testutil::apply_gauge(pred, g_rot, g_t), gt);
    for (size_t i = 0; i < base.size(); ++i) {
      worst_gauge = std::max(worst_gauge,
                             std::abs(gauged[i].rot_err_deg - base[i].rot_err_deg));
      worst_gauge = std::max(
          worst_gauge, std::abs(gauged[i].trans_angle_err_deg - base[i].trans_angle_err_deg));
    }
  }
  const bool gauge_ok = worst_gauge < 1e-9;

  Outcome out;
  out.pass = examples_ok && gauge_ok;
  out.detail = fmt("worked examples deviate %.3g (limit 1e-12); pairwise errors move"
                   " %.3g deg under 100 gauges (limit 1e-9)",
                   worst, worst_gauge);
  return out;
}

// ---------------------------------------------------------------------------
// 8. Farthest point sampling vs exhaustive greedy.
// ---------------------------------------------------------------------------

std::vector<int> exhaustive_greedy(const std::vector<Eigen::Vector3d>& pts, int k) {
  std::vector<int> picked{0};
  std::vector<bool> used(pts.size(), false);
  used[0] = true;
  while (static_cast<int>(picked.size()) < k) {
    int best = -1;
    double best_dist = -1.0;
    for (size_t i = 0; i < pts.size(); ++i) {
      if (used[i]) continue;
      double min_d = std::numeric_limits<double>::infinity();
      for (int j : picked) min_d = std::min(min_d, (pts[i] - pts[j]).norm());
      if (min_d > best_dist) {
        best_dist = min_d;
        best = static_cast<int>(i);
      }
    }
    picked.push_back(best);
    used[best] = true;
  }
  return picked;
}

Outcome check_fps() {
  int mismatches = 0;
  for (int s = 0; s < 1000; ++s) {
    Rng rng(5000 + s);
    const int n = 1 + static_cast<int>(rng.integer(10));
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < n; ++i) {
      pts.emplace_back(rng.uniform(), rng.uniform(), rng.uniform());
    }
    const int k = 1 + static_cast<int>(rng.integer(static_cast<std::uint64_t>(n)));
    if (farthest_point_sample(pts, k) != exhaustive_greedy(pts, k)) ++mismatches;
  }
  Outcome out;
  out.pass = mismatches == 0;
  out.detail = fmt("%d/1000 seeded point sets (size <= 10) disagree with the exhaustive"
                   " greedy oracle (need 0)",
                   mismatches);
  return out;
}

// ---------------------------------------------------------------------------
// 9. Benchmark determinism under maximal parallelism.
// ---------------------------------------------------------------------------

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<unreadable>";
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Outcome check_bench_determinism() {
  BenchConfig cfg;
  cfg.scene.seed = 3;
  cfg.scene.gaussian_count = 15;
  cfg.scene.camera_count = 8;
  cfg.scene.image_width = 20;
  cfg.scene.image_height = 20;
  cfg.rot_sigmas_deg = {0.0, 1.5};
  cfg.context_counts = {2};
  cfg.n_target = 1;
  cfg.max_interval = 6;
  cfg.seed = 4;
  cfg.fit_iterations = 2;
  cfg.run_epa = true;
  cfg.epa.iters = 3;
  const unsigned hw = std::max(2u, std::thread::hardware_concurrency());
  cfg.render.threads = static_cast<int>(hw);
  cfg.epa.render = cfg.render;

  const auto base = std::filesystem::temp_directory_path() / "splatlab_acceptance_bench";
  const auto dir_a = base / "a";
  const auto dir_b = base / "b";
  std::filesystem::remove_all(base);
  run_bench(cfg, dir_a.string());
  run_bench(cfg, dir_b.string());

  int files = 0, diffs = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir_a)) {
    ++files;
    if (file_bytes(entry.path()) != file_bytes(dir_b / entry.path().filename())) ++diffs;
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir_b)) {
    if (!std::filesystem::exists(dir_a / entry.path().filename())) ++diffs;
  }
  std::filesystem::remove_all(base);

  Outcome out;
  out.pass = diffs == 0 && files >= 6;
  out.detail = fmt("%d output files (csv, table, config, provenance, pfm) at %u render"
                   " threads; %d differ between the two runs (need 0)",
                   files, hw, diffs);
  return out;
}

// ---------------------------------------------------------------------------
// 10. Joint optimization: ground-truth pose supervision lifts the pose AUC.
// ---------------------------------------------------------------------------

double auc_at_5(const std::vector<CameraPose>& pred, const std::vector<CameraPose>& gt) {
  std::vector<double> errors;
  for (const PoseErrorSample& e : pairwise_pose_errors(pred, gt)) {
    errors.push_back(e.max_err_deg());
  }
  return pose_auc(errors, {5.0})[0];
}

Outcome check_joint_supervision() {
  SyntheticSceneSpec spec;
  spec.seed = 13;
  spec.gaussian_count = 150;
  spec.camera_count = 8;
  spec.image_width = 16;
  spec.image_height = 16;
  const SyntheticScene synth = make_synthetic_scene(spec);

  const int n_views = 4;
  const int n_ctx = 2;
  std::vector<ImageBuffer> images(synth.images.begin(), synth.images.begin() + n_views);
  std::vector<CameraPose> gt(synth.cameras.begin(), synth.cameras.begin() + n_views);

  JointConfig cfg;
  cfg.iters = 40;
  cfg.lr_pose = 2e-3;
  cfg.lr_scene = 2e-5;
  const LossWeights w;

  int successes = 0;
  for (int k = 0; k < 20; ++k) {
    GeometryExpertSpec geo;
    geo.kind = GeometryExpertKind::kNoisyOracle;
    geo.noise.rot_deg_sigma = 3.0;
    geo.noise.trans_rel_sigma = 0.02;
    geo.noise.seed = 6000 + k;
    const std::vector<CameraPose> noisy = estimate_poses(geo, {}, gt);

    const JointResult supervised =
        joint_optimize(images, n_ctx, noisy, gt, synth.scene, w, cfg);
    const JointResult unsupervised =
        joint_optimize(images, n_ctx, noisy, {}, synth.scene, w, cfg);

    const bool auc_up = auc_at_5(supervised.poses, gt) > auc_at_5(unsupervised.poses, gt);
    const bool never_worse = supervised.best_total <= supervised.initial_total &&
                             unsupervised.best_total <= unsupervised.initial_total;
    if (auc_up && never_worse) ++successes;
  }
  Outcome out;
  out.pass = successes >= 18;
  out.detail = fmt("supervised run beat the unsupervised run on pose AUC@5 deg (with"
                   " best-iterate loss <= initial) in %d/20 seeds (need 18)",
                   successes);
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {"renderer oracle equivalence", check_renderer_equivalence},
      {"gradient correctness", check_gradient_correctness},
      {"loss identities and gauge invariance", check_loss_identities},
      {"default loss weights", check_default_weights},
      {"pose-alignment recovery", check_epa_recovery},
      {"pipeline bypass and noise monotonicity", check_pipeline_properties},
      {"pose AUC examples and gauge invariance", check_pose_auc},
      {"farthest point sampling vs exhaustive greedy", check_fps},
      {"benchmark determinism", check_bench_determinism},
      {"joint optimization supervision benefit", check_joint_supervision},
  };

  int failures = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    Outcome result;
    try {
      result = c.fn();
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail = std::string("threw: ") + e.what();
    }
    if (!result.pass) ++failures;
    std::printf("criterion %2d [%s]: %s — %s\n", index, result.pass ? "PASS" : "FAIL", c.name,
                result.detail.c_str());
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all %d criteria passed\n", index);
  } else {
    std::printf("%d of %d criteria FAILED\n", failures, index);
  }
  return failures;
}
