#include "splatlab/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

#include "splatlab/error.hpp"
#include "splatlab/so3.hpp"

namespace splatlab {

void RenderConfig::validate() const {
  if (!(std::isfinite(near_plane) && near_plane > 0.0)) {
    fail(ErrorKind::InvalidConfig, "near_plane must be positive and finite");
  }
  if (!(std::isfinite(dilation) && dilation >= 0.0)) {
    fail(ErrorKind::InvalidConfig, "dilation must be non-negative and finite");
  }
  if (!(alpha_max > 0.0 && alpha_max <= 1.0)) {
    fail(ErrorKind::InvalidConfig, "alpha_max must lie in (0, 1]");
  }
  if (!(alpha_cut > 0.0 && alpha_cut < 1.0)) {
    fail(ErrorKind::InvalidConfig, "alpha_cut must lie in (0, 1)");
  }
  if (!(std::isfinite(t_min) && t_min >= 0.0 && t_min < 1.0)) {
    fail(ErrorKind::InvalidConfig, "t_min must lie in [0, 1)");
  }
  if (tile_size < 1) fail(ErrorKind::InvalidConfig, "tile_size must be >= 1");
  if (threads < 0) fail(ErrorKind::InvalidConfig, "threads must be >= 0");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kDetGuard = 1e-12;   // cov2d determinant floor; below -> invisible
constexpr double kFootprintPad = 1e-6;  // px, absorbs rounding at the footprint edge

// Everything the forward and backward passes need about one visible Gaussian,
// cached in double precision. Entries are kept in depth-sorted order.
struct Prepared {
  int index = 0;  // position in the input scene
  // Forward quantities.
  double u = 0.0, v = 0.0;          // mean2d, pixels
  double depth = 0.0;               // camera-space z
  double ca = 0.0, cb = 0.0, cc = 0.0;  // conic [[ca, cb], [cb, cc]] = cov2d^{-1}
  double opacity = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();  // clamped to [0, 1]
  double rx = 0.0, ry = 0.0;        // footprint half-extents, pixels
  // Backward caches.
  Eigen::Matrix2d cov2d = Eigen::Matrix2d::Zero();
  Eigen::Matrix<double, 2, 3> jac = Eigen::Matrix<double, 2, 3>::Zero();
  Eigen::Matrix3d cov_cam = Eigen::Matrix3d::Zero();  // R_cam Sigma R_cam^T
  Eigen::Matrix3d basis = Eigen::Matrix3d::Zero();    // Q * diag(exp(log_scale))
  Eigen::Matrix3d rot_g = Eigen::Matrix3d::Zero();    // Gaussian orientation Q
  Eigen::Vector3d exp_scale = Eigen::Vector3d::Zero();
  Eigen::Vector4d quat_n = Eigen::Vector4d::Zero();   // normalized (w, x, y, z)
  double quat_norm = 1.0;                             // raw quaternion norm
  Eigen::Vector3d mean_cam = Eigen::Vector3d::Zero(); // R_cam mean + t
  Eigen::Vector3d color_raw = Eigen::Vector3d::Zero();  // pre-clamp color
};

void check_gaussian_finite(const Gaussian& g, int index) {
  const bool ok = g.mean.allFinite() && g.log_scale.allFinite() && g.rotation_q.allFinite() &&
                  std::isfinite(g.opacity_logit) && g.color.allFinite();
  if (!ok) {
    fail(ErrorKind::NonFiniteValue,
         "gaussian " + std::to_string(index) + " has a non-finite attribute");
  }
}

// Shared projection used by the render paths. Returns false when the Gaussian
// cannot contribute any sample with alpha >= alpha_cut inside the image.
bool project_one(const Gaussian& g, int index, const Eigen::Matrix3d& r_cam,
                 const Eigen::Vector3d& t_cam, const Intrinsics& k, const RenderConfig& cfg,
                 Prepared& out) {
  check_gaussian_finite(g, index);

  const Eigen::Vector3d mean = g.mean.cast<double>();
  const Eigen::Vector3d m = r_cam * mean + t_cam;
  if (!(m.z() > cfg.near_plane)) return false;

  const Eigen::Vector4d q_raw = g.rotation_q.cast<double>();
  const double qn = q_raw.norm();
  if (!(qn > 0.0) || !std::isfinite(qn)) {
    fail(ErrorKind::InvalidQuaternion,
         "gaussian " + std::to_string(index) + " has a zero-norm quaternion");
  }
  const Eigen::Vector4d quat = q_raw / qn;
  const Eigen::Matrix3d rot_g = quat_to_mat(quat);
  const Eigen::Vector3d es = g.log_scale.cast<double>().array().exp().matrix();
  const Eigen::Matrix3d basis = rot_g * es.asDiagonal();          // B = Q S
  const Eigen::Matrix3d cov3 = basis * basis.transpose();         // Sigma = B B^T
  const Eigen::Matrix3d cov_cam = r_cam * cov3 * r_cam.transpose();

  const double z = m.z();
  const double inv_z = 1.0 / z;
  Eigen::Matrix<double, 2, 3> jac;
  jac << k.fx * inv_z, 0.0, -k.fx * m.x() * inv_z * inv_z,
         0.0, k.fy * inv_z, -k.fy * m.y() * inv_z * inv_z;
  Eigen::Matrix2d cov2d = jac * cov_cam * jac.transpose();
  cov2d(0, 0) += cfg.dilation;
  cov2d(1, 1) += cfg.dilation;

  const double det = cov2d(0, 0) * cov2d(1, 1) - cov2d(0, 1) * cov2d(1, 0);
  if (!(det > kDetGuard) || !cov2d.allFinite()) return false;

  const double op = sigmoid(static_cast<double>(g.opacity_logit));
  if (op < cfg.alpha_cut) return false;  // peak alpha already below the skip threshold

  // Half-extents of the axis-aligned box of the {alpha >= alpha_cut} ellipse:
  // d^T conic d <= 2 ln(op / alpha_cut) has x-extent sqrt(2 ln(op/alpha_cut) * cov2d_xx).
  const double chi2 = 2.0 * std::log(op / cfg.alpha_cut);
  const double rx = std::sqrt(std::max(0.0, chi2 * cov2d(0, 0))) + kFootprintPad;
  const double ry = std::sqrt(std::max(0.0, chi2 * cov2d(1, 1))) + kFootprintPad;

  const double u = k.fx * m.x() * inv_z + k.cx;
  const double v = k.fy * m.y() * inv_z + k.cy;
  const double w = static_cast<double>(k.width), h = static_cast<double>(k.height);
  if (u + rx < 0.0 || u - rx > w || v + ry < 0.0 || v - ry > h) return false;

  out.index = index;
  out.u = u;
  out.v = v;
  out.depth = z;
  const double inv_det = 1.0 / det;
  out.ca = cov2d(1, 1) * inv_det;
  out.cb = -cov2d(0, 1) * inv_det;
  out.cc = cov2d(0, 0) * inv_det;
  out.opacity = op;
  out.color_raw = g.color.cast<double>();
  out.color = out.color_raw.cwiseMax(0.0).cwiseMin(1.0);
  out.rx = rx;
  out.ry = ry;
  out.cov2d = cov2d;
  out.jac = jac;
  out.cov_cam = cov_cam;
  out.basis = basis;
  out.rot_g = rot_g;
  out.exp_scale = es;
  out.quat_n = quat;
  out.quat_norm = qn;
  out.mean_cam = m;
  return true;
}

// Projects every Gaussian and returns the visible ones sorted by increasing
// depth with a stable tie-break on input index.
std::vector<Prepared> prepare(const GaussianScene& scene, const CameraPose& pose,
                              const RenderConfig& cfg) {
  cfg.validate();
  pose.validate();
  if (scene.gaussians.empty()) fail(ErrorKind::EmptyScene, "scene has no gaussians");

  std::vector<Prepared> out;
  out.reserve(scene.gaussians.size());
  Prepared p;
  for (size_t i = 0; i < scene.gaussians.size(); ++i) {
    if (project_one(scene.gaussians[i], static_cast<int>(i), pose.rotation, pose.translation,
                    pose.intrinsics, cfg, p)) {
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end(), [](const Prepared& a, const Prepared& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.index < b.index;
  });
  return out;
}

struct TileGrid {
  int tiles_x = 0, tiles_y = 0;
  std::vector<std::vector<int>> lists;  // per tile: positions into the sorted vector
};

// Bins sorted Gaussians into tiles; within each tile the list stays depth-ordered
// because the outer iteration is over the sorted vector.
TileGrid bin_tiles(const std::vector<Prepared>& ps, const Intrinsics& k, int tile_size) {
  TileGrid grid;
  grid.tiles_x = (k.width + tile_size - 1) / tile_size;
  grid.tiles_y = (k.height + tile_size - 1) / tile_size;
  grid.lists.resize(static_cast<size_t>(grid.tiles_x) * grid.tiles_y);
  const double ts = static_cast<double>(tile_size);
  // Clamp in double space before the int cast: the cull in project_one only
  // guarantees the footprint overlaps the image, not that its far edges are
  // representable as int.
  const double max_x = static_cast<double>(grid.tiles_x - 1);
  const double max_y = static_cast<double>(grid.tiles_y - 1);
  for (size_t p = 0; p < ps.size(); ++p) {
    const Prepared& g = ps[p];
    const int x0 = static_cast<int>(std::clamp(std::floor((g.u - g.rx) / ts), 0.0, max_x));
    const int x1 = static_cast<int>(std::clamp(std::floor((g.u + g.rx) / ts), 0.0, max_x));
    const int y0 = static_cast<int>(std::clamp(std::floor((g.v - g.ry) / ts), 0.0, max_y));
    const int y1 = static_cast<int>(std::clamp(std::floor((g.v + g.ry) / ts), 0.0, max_y));
    for (int ty = y0; ty <= y1; ++ty) {
      for (int tx = x0; tx <= x1; ++tx) {
        grid.lists[static_cast<size_t>(ty) * grid.tiles_x + tx].push_back(static_cast<int>(p));
      }
    }
  }
  return grid;
}

// Front-to-back compositing of one pixel over a depth-ordered candidate list.
// Writes the composited color and the final transmittance. t_min = 0 walks the
// whole list (no early exit).
inline void composite_pixel(const std::vector<Prepared>& ps, const std::vector<int>& list,
                            double px, double py, const RenderConfig& cfg, double t_min,
                            const Eigen::Vector3d& bg, double* rgb_out, double* t_out) {
  double cr = 0.0, cg = 0.0, cb = 0.0;
  double t = 1.0;
  for (const int p : list) {
    const Prepared& g = ps[p];
    const double dx = px - g.u;
    const double dy = py - g.v;
    const double rho = g.ca * dx * dx + 2.0 * g.cb * dx * dy + g.cc * dy * dy;
    double alpha = g.opacity * std::exp(-0.5 * rho);
    if (alpha < cfg.alpha_cut) continue;
    if (alpha > cfg.alpha_max) alpha = cfg.alpha_max;
    const double w = alpha * t;
    cr += w * g.color.x();
    cg += w * g.color.y();
    cb += w * g.color.z();
    t *= 1.0 - alpha;
    if (t < t_min) break;
  }
  rgb_out[0] = cr + t * bg.x();
  rgb_out[1] = cg + t * bg.y();
  rgb_out[2] = cb + t * bg.z();
  if (t_out != nullptr) *t_out = t;
}

// Runs fn(tile_index) over all tiles, optionally on several threads. Tiles own
// disjoint pixels, so any schedule yields identical output.
void for_each_tile(int tile_count, int threads, const std::function<void(int)>& fn) {
  int n = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  n = std::min(n, tile_count);
  if (n <= 1) {
    for (int t = 0; t < tile_count; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (int tid = 0; tid < n; ++tid) {
    pool.emplace_back([&, tid]() {
      for (int t = tid; t < tile_count; t += n) fn(t);
    });
  }
  for (auto& th : pool) th.join();
}

// Forward tile render into an image, optionally capturing per-pixel final
// transmittance. Used by render() (cfg.t_min) and the gradient pass (t_min 0).
void render_tiles(const std::vector<Prepared>& ps, const TileGrid& grid,
                  const GaussianScene& scene, const Intrinsics& k, const RenderConfig& cfg,
                  double t_min, ImageBuffer& img, std::vector<double>* t_final) {
  const Eigen::Vector3d bg = scene.background_color.cast<double>();
  const int tile_count = grid.tiles_x * grid.tiles_y;
  for_each_tile(tile_count, cfg.threads, [&](int tile) {
    const int tx = tile % grid.tiles_x;
    const int ty = tile / grid.tiles_x;
    const auto& list = grid.lists[static_cast<size_t>(tile)];
    const int x0 = tx * cfg.tile_size, x1 = std::min(k.width, x0 + cfg.tile_size);
    const int y0 = ty * cfg.tile_size, y1 = std::min(k.height, y0 + cfg.tile_size);
    double rgb[3];
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        double t = 1.0;
        composite_pixel(ps, list, x + 0.5, y + 0.5, cfg, t_min, bg, rgb, &t);
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = rgb[c];
        if (t_final != nullptr) (*t_final)[static_cast<size_t>(y) * k.width + x] = t;
      }
    }
  });
}

}  // namespace

std::optional<ProjectedGaussian> project_gaussian(const Gaussian& g, const CameraPose& pose,
                                                  const RenderConfig& cfg) {
  cfg.validate();
  pose.validate();
  check_gaussian_finite(g, 0);

  const Intrinsics& k = pose.intrinsics;
  const Eigen::Vector3d m =
      pose.rotation * g.mean.cast<double>() + pose.translation;
  if (!(m.z() > cfg.near_plane)) return std::nullopt;

  const Eigen::Matrix3d rot_g = quat_to_mat(g.rotation_q.cast<double>());
  const Eigen::Vector3d es = g.log_scale.cast<double>().array().exp().matrix();
  const Eigen::Matrix3d cov3 =
      rot_g * es.cwiseProduct(es).asDiagonal() * rot_g.transpose();

  const double z = m.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << k.fx / z, 0.0, -k.fx * m.x() / (z * z),
         0.0, k.fy / z, -k.fy * m.y() / (z * z);
  Eigen::Matrix2d cov2d = jac * (pose.rotation * cov3 * pose.rotation.transpose()) *
                          jac.transpose();
  cov2d(0, 0) += cfg.dilation;
  cov2d(1, 1) += cfg.dilation;
  const double det = cov2d.determinant();
  if (!(det > kDetGuard) || !cov2d.allFinite()) return std::nullopt;

  ProjectedGaussian out;
  out.mean2d = Eigen::Vector2d(k.fx * m.x() / z + k.cx, k.fy * m.y() / z + k.cy);
  out.cov2d = cov2d;
  out.depth = z;
  out.color = g.color.cast<double>().cwiseMax(0.0).cwiseMin(1.0);
  out.opacity = sigmoid(static_cast<double>(g.opacity_logit));

  const double rx = 3.0 * std::sqrt(cov2d(0, 0));
  const double ry = 3.0 * std::sqrt(cov2d(1, 1));
  const double w = static_cast<double>(k.width), h = static_cast<double>(k.height);
  if (out.mean2d.x() + rx < 0.0 || out.mean2d.x() - rx > w || out.mean2d.y() + ry < 0.0 ||
      out.mean2d.y() - ry > h) {
    return std::nullopt;
  }
  return out;
}

ImageBuffer render(const GaussianScene& scene, const CameraPose& pose,
                   const RenderConfig& cfg) {
  const std::vector<Prepared> ps = prepare(scene, pose, cfg);
  const Intrinsics& k = pose.intrinsics;
  const TileGrid grid = bin_tiles(ps, k, cfg.tile_size);
  ImageBuffer img(k.width, k.height);
  render_tiles(ps, grid, scene, k, cfg, cfg.t_min, img, nullptr);
  return img;
}

ImageBuffer render_reference(const GaussianScene& scene, const CameraPose& pose,
                             const RenderConfig& cfg) {
  // Deliberately self-contained: straight-line projection and compositing that
  // shares no machinery with the tile path beyond the error contract.
  cfg.validate();
  pose.validate();
  if (scene.gaussians.empty()) fail(ErrorKind::EmptyScene, "scene has no gaussians");

  struct Splat {
    double u, v, depth, a, b, c, op;
    Eigen::Vector3d col;
    int idx;
  };

  const Intrinsics& k = pose.intrinsics;
  const Eigen::Matrix3d r = pose.rotation;
  const Eigen::Vector3d t = pose.translation;

  std::vector<Splat> splats;
  splats.reserve(scene.gaussians.size());
  for (size_t i = 0; i < scene.gaussians.size(); ++i) {
    const Gaussian& g = scene.gaussians[i];
    check_gaussian_finite(g, static_cast<int>(i));
    const Eigen::Vector3d cam = r * g.mean.cast<double>() + t;
    if (!(cam.z() > cfg.near_plane)) continue;

    const Eigen::Matrix3d q = quat_to_mat(g.rotation_q.cast<double>());
    Eigen::Vector3d s2;
    for (int a = 0; a < 3; ++a) {
      const double e = std::exp(static_cast<double>(g.log_scale[a]));
      s2[a] = e * e;
    }
    const Eigen::Matrix3d sigma = q * s2.asDiagonal() * q.transpose();

    const double z = cam.z();
    Eigen::Matrix<double, 2, 3> jac;
    jac << k.fx / z, 0.0, -k.fx * cam.x() / (z * z),
           0.0, k.fy / z, -k.fy * cam.y() / (z * z);
    Eigen::Matrix2d cov = jac * (r * sigma * r.transpose()) * jac.transpose();
    cov(0, 0) += cfg.dilation;
    cov(1, 1) += cfg.dilation;
    const double det = cov.determinant();
    if (!(det > kDetGuard) || !cov.allFinite()) continue;
    const Eigen::Matrix2d conic = cov.inverse();

    Splat sp;
    sp.u = k.fx * cam.x() / z + k.cx;
    sp.v = k.fy * cam.y() / z + k.cy;
    sp.depth = z;
    sp.a = conic(0, 0);
    sp.b = conic(0, 1);
    sp.c = conic(1, 1);
    sp.op = 1.0 / (1.0 + std::exp(-static_cast<double>(g.opacity_logit)));
    sp.col = g.color.cast<double>().cwiseMax(0.0).cwiseMin(1.0);
    sp.idx = static_cast<int>(i);
    splats.push_back(sp);
  }
  std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.idx < b.idx;
  });

  const Eigen::Vector3d bg = scene.background_color.cast<double>();
  ImageBuffer img(k.width, k.height);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      Eigen::Vector3d acc = Eigen::Vector3d::Zero();
      double trans = 1.0;
      for (const Splat& sp : splats) {
        const double dx = px - sp.u, dy = py - sp.v;
        const double rho = sp.a * dx * dx + 2.0 * sp.b * dx * dy + sp.c * dy * dy;
        double alpha = sp.op * std::exp(-0.5 * rho);
        if (alpha < cfg.alpha_cut) continue;
        if (alpha > cfg.alpha_max) alpha = cfg.alpha_max;
        acc += (alpha * trans) * sp.col;
        trans *= 1.0 - alpha;
      }
      acc += trans * bg;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = acc[c];
    }
  }
  return img;
}

DepthMap accumulated_alpha(const GaussianScene& scene, const CameraPose& pose,
                           const RenderConfig& cfg) {
  const std::vector<Prepared> ps = prepare(scene, pose, cfg);
  const Intrinsics& k = pose.intrinsics;
  DepthMap out(k.width, k.height);
  std::vector<int> all(ps.size());
  for (size_t i = 0; i < ps.size(); ++i) all[i] = static_cast<int>(i);
  const Eigen::Vector3d bg = Eigen::Vector3d::Zero();
  double rgb[3];
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      double t = 1.0;
      composite_pixel(ps, all, x + 0.5, y + 0.5, cfg, 0.0, bg, rgb, &t);
      out.values[static_cast<size_t>(y) * k.width + x] = 1.0 - t;
    }
  }
  return out;
}

namespace {

// Per-(tile, list entry) gradient scratch: d loss / d {mean2d, conic, opacity,
// color} accumulated over the tile's pixels.
struct LocalGrad {
  double du = 0.0, dv = 0.0;            // mean2d
  double da = 0.0, db = 0.0, dc = 0.0;  // conic components (a, b, c)
  double dop = 0.0;                     // opacity (pre-logit)
  double dcol[3] = {0.0, 0.0, 0.0};     // clamped color
};

// One compositing contribution replayed for the backward walk.
struct Contribution {
  int k;           // position in the tile list
  double alpha;    // capped alpha actually composited
  double alpha_raw;  // opacity * weight before the cap
  double t_at;     // transmittance in front of this contribution
};

}  // namespace

std::pair<RenderLossParts, GradientBundle> render_with_gradients(
    const GaussianScene& scene, const CameraPose& pose, const ImageBuffer& target,
    const LossWeights& w, const RenderConfig& cfg) {
  w.validate();
  const Intrinsics& k = pose.intrinsics;
  if (target.width != k.width || target.height != k.height) {
    fail(ErrorKind::ShapeMismatch, "target image does not match camera intrinsics");
  }

  const std::vector<Prepared> ps = prepare(scene, pose, cfg);
  const TileGrid grid = bin_tiles(ps, k, cfg.tile_size);
  const int width = k.width, height = k.height;
  const size_t npix = static_cast<size_t>(width) * height;

  // Phase 1: exhaustive forward (no early exit), keeping per-pixel final
  // transmittance for the backward recurrence.
  ImageBuffer rendered(width, height);
  std::vector<double> t_final(npix, 1.0);
  render_tiles(ps, grid, scene, k, cfg, 0.0, rendered, &t_final);

  const RenderLossParts parts = render_loss(rendered, target, w);

  // Phase 2: d loss / d rendered-pixel. MSE part: 2 (C - T) / (3 H W).
  // Perceptual part: each finite-difference residual e = (C_next - C_this) -
  // (T_next - T_this) contributes +2e/cnt to the next pixel and -2e/cnt here.
  // Each pixel gathers the residuals of its own four incident edges in one
  // write: scattering +/- increments onto neighbors makes consecutive loop
  // iterations read-modify-write the same slot, which the -O3 loop vectorizer
  // turns into lost updates (observed with GCC 11).
  std::vector<double> dldc(npix * 3, 0.0);
  {
    const double inv_n = 1.0 / static_cast<double>(npix * 3);
    for (size_t i = 0; i < npix * 3; ++i) {
      dldc[i] = 2.0 * (rendered.rgb[i] - target.rgb[i]) * inv_n;
    }
    const long cnt_h = static_cast<long>(height) * std::max(0, width - 1) * 3;
    const long cnt_v = static_cast<long>(std::max(0, height - 1)) * width * 3;
    const long cnt = cnt_h + cnt_v;
    if (cnt > 0 && w.lambda_perc != 0.0) {
      const double coef = w.lambda_perc * 2.0 / static_cast<double>(cnt);
      // Residual of the horizontal edge between (y, x) and (y, x + 1), zero
      // when the edge leaves the image; likewise vertically.
      const auto h_res = [&](int y, int x, int c) -> double {
        if (x < 0 || x + 1 >= width) return 0.0;
        return (rendered.at(y, x + 1, c) - rendered.at(y, x, c)) -
               (target.at(y, x + 1, c) - target.at(y, x, c));
      };
      const auto v_res = [&](int y, int x, int c) -> double {
        if (y < 0 || y + 1 >= height) return 0.0;
        return (rendered.at(y + 1, x, c) - rendered.at(y, x, c)) -
               (target.at(y + 1, x, c) - target.at(y, x, c));
      };
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          for (int c = 0; c < 3; ++c) {
            const double pull = (h_res(y, x - 1, c) - h_res(y, x, c)) +
                                (v_res(y - 1, x, c) - v_res(y, x, c));
            dldc[(static_cast<size_t>(y) * width + x) * 3 + c] += coef * pull;
          }
        }
      }
    }
  }

  // Phase 3: per-tile backward into private scratch, replaying each pixel's
  // forward walk so transmittances come from the same products as the forward
  // pass (no divisions, no underflow hazard).
  const Eigen::Vector3d bg = scene.background_color.cast<double>();
  const int tile_count = grid.tiles_x * grid.tiles_y;
  std::vector<std::vector<LocalGrad>> scratch(static_cast<size_t>(tile_count));
  for_each_tile(tile_count, cfg.threads, [&](int tile) {
    const auto& list = grid.lists[static_cast<size_t>(tile)];
    auto& local = scratch[static_cast<size_t>(tile)];
    local.assign(list.size(), LocalGrad{});
    if (list.empty()) return;
    const int tx = tile % grid.tiles_x;
    const int ty = tile / grid.tiles_x;
    const int x0 = tx * cfg.tile_size, x1 = std::min(width, x0 + cfg.tile_size);
    const int y0 = ty * cfg.tile_size, y1 = std::min(height, y0 + cfg.tile_size);
    std::vector<Contribution> contribs;
    contribs.reserve(list.size());
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        contribs.clear();
        double t = 1.0;
        for (size_t kk = 0; kk < list.size(); ++kk) {
          const Prepared& g = ps[static_cast<size_t>(list[kk])];
          const double dx = px - g.u;
          const double dy = py - g.v;
          const double rho = g.ca * dx * dx + 2.0 * g.cb * dx * dy + g.cc * dy * dy;
          const double alpha_raw = g.opacity * std::exp(-0.5 * rho);
          if (alpha_raw < cfg.alpha_cut) continue;
          const double alpha = std::min(alpha_raw, cfg.alpha_max);
          contribs.push_back({static_cast<int>(kk), alpha, alpha_raw, t});
          t *= 1.0 - alpha;
        }
        if (contribs.empty()) continue;
        const size_t pix = static_cast<size_t>(y) * width + x;
        const double tf = t_final[pix];
        const Eigen::Vector3d gpix(dldc[pix * 3], dldc[pix * 3 + 1], dldc[pix * 3 + 2]);
        // Reverse walk with the suffix S = sum_{j > i} c_j alpha_j T_j.
        Eigen::Vector3d suffix = Eigen::Vector3d::Zero();
        const double gdot_bg = gpix.dot(bg);
        for (size_t ci = contribs.size(); ci-- > 0;) {
          const Contribution& cb = contribs[ci];
          const Prepared& g = ps[static_cast<size_t>(list[static_cast<size_t>(cb.k)])];
          LocalGrad& lg = local[static_cast<size_t>(cb.k)];
          const double weight = cb.alpha * cb.t_at;
          lg.dcol[0] += gpix.x() * weight;
          lg.dcol[1] += gpix.y() * weight;
          lg.dcol[2] += gpix.z() * weight;
          // d C / d alpha_i = c_i T_i - (suffix + bg T_final) / (1 - alpha_i).
          const double g_alpha = gpix.dot(g.color) * cb.t_at -
                                 (gpix.dot(suffix) + gdot_bg * tf) / (1.0 - cb.alpha);
          suffix += weight * g.color;
          if (cb.alpha_raw > cfg.alpha_max) continue;  // capped: alpha chain is flat
          const double dx = px - g.u;
          const double dy = py - g.v;
          lg.dop += g_alpha * (cb.alpha_raw / g.opacity);  // = g_alpha * exp(-rho/2)
          const double g_rho = -0.5 * cb.alpha_raw * g_alpha;
          lg.da += g_rho * dx * dx;
          lg.db += g_rho * 2.0 * dx * dy;
          lg.dc += g_rho * dy * dy;
          // d rho / d mean2d = -2 conic d.
          lg.du += g_rho * -2.0 * (g.ca * dx + g.cb * dy);
          lg.dv += g_rho * -2.0 * (g.cb * dx + g.cc * dy);
        }
      }
    }
  });

  // Merge tile scratch in fixed tile order so accumulation order (and hence
  // bit pattern) is independent of the thread schedule.
  std::vector<LocalGrad> acc(ps.size());
  for (int tile = 0; tile < tile_count; ++tile) {
    const auto& list = grid.lists[static_cast<size_t>(tile)];
    const auto& local = scratch[static_cast<size_t>(tile)];
    for (size_t kk = 0; kk < list.size(); ++kk) {
      LocalGrad& a = acc[static_cast<size_t>(list[kk])];
      const LocalGrad& l = local[kk];
      a.du += l.du;
      a.dv += l.dv;
      a.da += l.da;
      a.db += l.db;
      a.dc += l.dc;
      a.dop += l.dop;
      for (int c = 0; c < 3; ++c) a.dcol[c] += l.dcol[c];
    }
  }

  // Finalize: chain screen-space gradients back to Gaussian attributes and the
  // camera, in depth order (deterministic).
  GradientBundle bundle;
  bundle.d_gaussians.assign(scene.gaussians.size(), GaussianGrad{});
  CameraGrad& cam = bundle.d_camera;
  const Eigen::Matrix3d r_cam = pose.rotation;
  const Eigen::Vector3d t_cam = pose.translation;

  for (size_t p = 0; p < ps.size(); ++p) {
    const Prepared& g = ps[p];
    const LocalGrad& a = acc[p];
    GaussianGrad& out = bundle.d_gaussians[static_cast<size_t>(g.index)];

    // Color: clamp passes gradient only inside the open interval (0, 1).
    for (int c = 0; c < 3; ++c) {
      const bool open = g.color_raw[c] > 0.0 && g.color_raw[c] < 1.0;
      out.color[c] = open ? a.dcol[c] : 0.0;
    }
    // Opacity: sigmoid chain.
    out.opacity_logit = a.dop * g.opacity * (1.0 - g.opacity);

    // Conic -> cov2d: A = cov2d^{-1}, dA = -A dCov A, with the symmetric matrix
    // gradient of the (a, b, c) parameterization being [[da, db/2], [db/2, dc]].
    Eigen::Matrix2d conic;
    conic << g.ca, g.cb, g.cb, g.cc;
    Eigen::Matrix2d gmat;
    gmat << a.da, 0.5 * a.db, 0.5 * a.db, a.dc;
    const Eigen::Matrix2d g2 = -conic * gmat * conic;  // d loss / d cov2d

    // cov2d = J M J^T + dilation I.
    const Eigen::Matrix3d g_m_cov = g.jac.transpose() * g2 * g.jac;     // d/dM
    const Eigen::Matrix<double, 2, 3> g_jac = 2.0 * g2 * g.jac * g.cov_cam;  // d/dJ

    // Screen mean and Jacobian both depend on the camera-space mean m.
    const double z = g.mean_cam.z();
    const double inv_z = 1.0 / z;
    const double inv_z2 = inv_z * inv_z;
    const double inv_z3 = inv_z2 * inv_z;
    const double mx = g.mean_cam.x(), my = g.mean_cam.y();
    Eigen::Vector3d g_m(a.du * k.fx * inv_z, a.dv * k.fy * inv_z,
                        a.du * -k.fx * mx * inv_z2 + a.dv * -k.fy * my * inv_z2);
    g_m.x() += g_jac(0, 2) * -k.fx * inv_z2;
    g_m.y() += g_jac(1, 2) * -k.fy * inv_z2;
    g_m.z() += g_jac(0, 0) * -k.fx * inv_z2 + g_jac(0, 2) * 2.0 * k.fx * mx * inv_z3 +
               g_jac(1, 1) * -k.fy * inv_z2 + g_jac(1, 2) * 2.0 * k.fy * my * inv_z3;

    // Gaussian mean: m = R_cam mean + t.
    out.mean = r_cam.transpose() * g_m;

    // Covariance chain: M = R_cam Sigma R_cam^T, Sigma = B B^T, B = Q S.
    const Eigen::Matrix3d g_sigma = r_cam.transpose() * g_m_cov * r_cam;
    const Eigen::Matrix3d g_basis = 2.0 * g_sigma * g.basis;
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += g_basis(i, j) * g.rot_g(i, j);
      out.log_scale[j] = s * g.exp_scale[j];
    }
    const Eigen::Matrix3d g_q = g_basis * g.exp_scale.asDiagonal();

    // Rotation matrix -> unit quaternion (w, x, y, z) -> raw quaternion.
    const double qw = g.quat_n[0], qx = g.quat_n[1], qy = g.quat_n[2], qz = g.quat_n[3];
    Eigen::Matrix3d dw, dxm, dym, dzm;
    dw << 0.0, -qz, qy,
          qz, 0.0, -qx,
         -qy, qx, 0.0;
    dxm << 0.0, qy, qz,
           qy, -2.0 * qx, -qw,
           qz, qw, -2.0 * qx;
    dym << -2.0 * qy, qx, qw,
           qx, 0.0, qz,
           -qw, qz, -2.0 * qy;
    dzm << -2.0 * qz, -qw, qx,
           qw, -2.0 * qz, qy,
           qx, qy, 0.0;
    Eigen::Vector4d g_qn(2.0 * (g_q.array() * dw.array()).sum(),
                         2.0 * (g_q.array() * dxm.array()).sum(),
                         2.0 * (g_q.array() * dym.array()).sum(),
                         2.0 * (g_q.array() * dzm.array()).sum());
    out.rotation_q = (g_qn - g.quat_n * g.quat_n.dot(g_qn)) / g.quat_norm;

    // Camera: translation, left rotation increment, intrinsics.
    cam.dt += g_m;
    const Eigen::Vector3d v_rot = g.mean_cam - t_cam;  // R_cam * mean
    cam.omega += v_rot.cross(g_m);
    cam.omega += 2.0 * skew_contract(g_m_cov * g.cov_cam);
    cam.dfx += a.du * mx * inv_z + g_jac(0, 0) * inv_z + g_jac(0, 2) * -mx * inv_z2;
    cam.dfy += a.dv * my * inv_z + g_jac(1, 1) * inv_z + g_jac(1, 2) * -my * inv_z2;
    cam.dcx += a.du;
    cam.dcy += a.dv;
  }

  return {parts, bundle};
}

}  // namespace splatlab
