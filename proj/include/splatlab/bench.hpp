#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "splatlab/camera.hpp"
#include "splatlab/config.hpp"
#include "splatlab/experts.hpp"
#include "splatlab/gaussian.hpp"
#include "splatlab/image.hpp"
#include "splatlab/metrics.hpp"
#include "splatlab/optim.hpp"
#include "splatlab/renderer.hpp"

namespace splatlab {

// ---------------------------------------------------------------------------
// View selection.
// ---------------------------------------------------------------------------

// Greedy farthest point sampling over 3D points. The first pick is index 0
// (or a seeded uniform index when random_start is set); every later pick
// maximizes the minimum Euclidean distance to the already-selected set, ties
// broken by lowest index. Returns indices in pick order. Throws BadK unless
// 1 <= k <= |centers|.
std::vector<int> farthest_point_sample(const std::vector<Eigen::Vector3d>& centers, int k,
                                       bool random_start = false, std::uint64_t seed = 0);

enum class TargetMode {
  kRandomHeldout,  // targets drawn seeded-uniformly from the window remainder
  kFixedIndex,     // targets given explicitly as absolute frame indices
};

struct SelectionProtocol {
  int n_context = 2;
  int n_target = 1;
  int max_interval = 50;  // selected context frames span at most this many frames
  std::uint64_t seed = 0;
  TargetMode target_mode = TargetMode::kRandomHeldout;
  std::vector<int> fixed_targets;  // kFixedIndex only

  void validate() const;
};

struct ViewSelection {
  std::vector<int> context_indices;  // ascending, disjoint from targets
  std::vector<int> target_indices;   // ascending
  int window_start = 0;   // first frame of the interval window
  int window_length = 0;  // min(max_interval + 1, frame count)
};

// Picks a seeded contiguous window of min(max_interval + 1, N) frames, runs
// farthest point sampling over the camera centers inside it to choose the
// context views, then draws the targets seeded-uniformly (without
// replacement) from the remaining window frames — or takes the fixed target
// list, which may point anywhere in [0, N) but must avoid the context set.
// Throws InsufficientFrames when the window cannot hold context + targets and
// InvalidConfig for malformed protocols or fixed-target conflicts.
ViewSelection select_views(const std::vector<CameraPose>& frames,
                           const SelectionProtocol& protocol);

// Camera center of a world-to-camera pose: -R^T t.
Eigen::Vector3d camera_center(const CameraPose& pose);

// ---------------------------------------------------------------------------
// Synthetic oracle scene.
// ---------------------------------------------------------------------------

struct SyntheticSceneSpec {
  std::uint64_t seed = 0;
  int gaussian_count = 150;
  int camera_count = 24;
  double orbit_radius = 4.0;
  int image_width = 64;
  int image_height = 64;
  Eigen::Vector3f background = Eigen::Vector3f::Zero();

  void validate() const;  // counts >= 1, radius > 0, image size >= 1
};

struct SyntheticScene {
  GaussianScene scene;
  std::vector<CameraPose> cameras;
  std::vector<ImageBuffer> images;  // oracle renders, one per camera
  std::vector<DepthMap> depths;     // composited splat depth, one per camera
  double scene_scale = 0.0;         // max ||translation|| over the cameras
};

// Deterministic oracle triple: seeded Gaussians inside the unit ball (per
// Gaussian, in order: direction, radius, three log-scales, rotation, opacity
// logit, color), cameras on a gently undulating orbit of the given radius
// looking at the origin (x right, y down, z forward; focal chosen so the unit
// ball fills most of the frame), and ground-truth images from the exhaustive
// oracle renderer. Depth maps come from composite_splat_depth and make the
// scene usable as an exact-depth prior for the fitting expert.
SyntheticScene make_synthetic_scene(const SyntheticSceneSpec& spec,
                                    const RenderConfig& render = {});

// Deterministic orbit camera i of n for the synthetic scene (exposed for
// trajectory tests): azimuth 2*pi*i/n, elevation 0.3*sin(azimuth) radians.
CameraPose orbit_camera(int index, int count, double radius, int width, int height);

// Alpha-composited mean splat depth per pixel, using the same projection and
// compositing rules as the renderer but evaluated exhaustively through the
// public projection entry point. Pixels where the accumulated weight stays
// below 1e-6 get fallback_depth; a negative fallback means "distance from the
// camera center to the world origin" (clamped above the near plane).
DepthMap composite_splat_depth(const GaussianScene& scene, const CameraPose& pose,
                               const RenderConfig& cfg = {}, double fallback_depth = -1.0);

// ---------------------------------------------------------------------------
// Benchmark sweep.
// ---------------------------------------------------------------------------

// Full-pipeline sweep over rotation-noise levels and context-view counts on
// the synthetic oracle scene. All outputs are deterministic for a fixed
// config: no timestamps or timings are written.
struct BenchConfig {
  SyntheticSceneSpec scene;
  RenderConfig render;
  LossWeights weights;
  std::vector<double> rot_sigmas_deg = {0.0, 2.0};
  std::vector<int> context_counts = {2, 3};
  double trans_rel_sigma = 0.02;
  double intr_rel_sigma = 0.0;
  int n_target = 2;
  int max_interval = 12;
  std::uint64_t seed = 1;
  int fit_iterations = 0;     // appearance-expert refinement steps
  double fit_lr = 2e-5;
  float init_opacity_logit = 0.0f;
  bool include_posed = true;  // add a posed-protocol baseline row per count
  bool run_epa = false;       // add a "+epa" row per pose-free run
  EpaConfig epa;
  std::vector<double> auc_thresholds_deg = {5.0, 10.0, 20.0};

  void validate() const;
};

// Reads a BenchConfig from key=value pairs (unknown keys are ignored; see
// README for the key list). Values not present keep the defaults above.
BenchConfig bench_config_from(const ConfigMap& config);

// Runs the sweep and returns one MetricReport per run, methods named
// "posed", "pose_free_rot<sigma>", and "pose_free_rot<sigma>+epa". When
// out_dir is non-empty it is created if needed and receives results.csv,
// results.txt (aligned table), bench_config.txt (the effective config), one
// provenance_<method>_c<count>.txt per pipeline run, and the rendered target
// views as <method>_c<count>_view<index>.pfm. Reruns with the same config
// produce byte-identical files. Throws IoError when the directory or a file
// cannot be written.
std::vector<MetricReport> run_bench(const BenchConfig& cfg, const std::string& out_dir);

// The effective configuration echoed by run_bench, serialized deterministically.
ConfigMap bench_config_to_map(const BenchConfig& cfg);

}  // namespace splatlab
