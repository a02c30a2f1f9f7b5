#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatlab/camera.hpp"
#include "splatlab/gaussian.hpp"
#include "splatlab/image.hpp"
#include "splatlab/losses.hpp"
#include "splatlab/optim.hpp"
#include "splatlab/renderer.hpp"

namespace splatlab {

// ---------------------------------------------------------------------------
// Geometry expert: produces camera poses for all views.
// ---------------------------------------------------------------------------

enum class GeometryExpertKind {
  kNoisyOracle,  // ground-truth poses + seeded perturbation
  kFileBacked,   // poses loaded from the pose text format
};

// Seeded pose perturbation. Per camera, draws happen in a fixed order:
//   1. rotation axis: isotropic unit vector (three normals);
//   2. rotation angle: |N(0, rot_deg_sigma^2)| degrees (half-normal);
//   3. translation: N(0, (trans_rel_sigma * scene_scale)^2) per axis, where
//      scene_scale is the largest ||translation|| among the input poses;
//   4. focal factor: fx and fy both scaled by 1 + N(0, intr_rel_sigma^2).
// Every draw is made regardless of the sigmas so streams stay aligned across
// noise settings, but a perturbation with sigma == 0 is not applied at all,
// which keeps the zero-noise output bit-identical to the input.
struct NoiseSpec {
  double rot_deg_sigma = 0.0;
  double trans_rel_sigma = 0.0;
  double intr_rel_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;  // sigmas finite and >= 0
};

struct GeometryExpertSpec {
  GeometryExpertKind kind = GeometryExpertKind::kNoisyOracle;
  NoiseSpec noise;   // kNoisyOracle
  std::string path;  // kFileBacked: pose text file
};

// Rotation noise is applied as a left increment exp([angle * axis]x) * R and
// translation noise additively in the camera frame, matching the increment
// convention used by the optimizers. Throws MissingOracle when kNoisyOracle
// has no ground-truth poses, ShapeMismatch when images and poses disagree in
// count, ParseError/IoError from the file-backed loader.
std::vector<CameraPose> estimate_poses(const GeometryExpertSpec& spec,
                                       const std::vector<ImageBuffer>& images,
                                       const std::vector<CameraPose>& gt_poses);

// ---------------------------------------------------------------------------
// Appearance expert: produces a Gaussian scene from posed context views.
// ---------------------------------------------------------------------------

enum class AppearanceExpertKind {
  kFitting,    // pixel-aligned unprojection + joint refinement, poses frozen
  kFileBacked  // binary Gaussian dump
};

struct FittingConfig {
  int iterations = 0;       // refinement steps after unprojection (0 = none)
  double lr = 2e-5;         // scene learning rate during refinement
  double constant_depth = 2.0;  // depth prior used when no maps are supplied
  InitConfig init;          // unprojection initialization (opacity, footprint)
  Eigen::Vector3f background = Eigen::Vector3f::Zero();  // stored on the scene
  RenderConfig render;      // used by the refinement stage
  LossWeights weights;      // render-loss weights for refinement

  void validate() const;  // iterations >= 0, constant_depth > 0
};

struct AppearanceExpertSpec {
  AppearanceExpertKind kind = AppearanceExpertKind::kFitting;
  FittingConfig fitting;
  std::string path;  // kFileBacked: binary Gaussian dump
};

// Fitting kind: unprojects every context pixel at the supplied depth (or the
// constant prior when depth_priors is empty), tags Gaussians with their
// source view, then — when iterations > 0 — runs joint_optimize with poses
// frozen and every context image as a render target. File-backed kind loads
// the dump; context inputs are ignored apart from the count check. Throws
// ShapeMismatch on image/pose/depth count or size disagreements.
GaussianScene generate_gaussians(const AppearanceExpertSpec& spec,
                                 const std::vector<ImageBuffer>& context_images,
                                 const std::vector<CameraPose>& context_poses,
                                 const std::vector<DepthMap>& depth_priors = {});

// ---------------------------------------------------------------------------
// Pipeline: geometry expert -> appearance expert.
// ---------------------------------------------------------------------------

enum class Protocol { kPosed, kPoseFree };

// "posed" / "pose_free"; InvalidConfig on any other string.
std::string protocol_name(Protocol protocol);
Protocol protocol_from_name(const std::string& name);

struct PipelineResult {
  std::vector<CameraPose> poses;  // all N views, context first
  GaussianScene scene;            // built from the n_context context views
  std::string provenance;         // key=value record, see below
};

// Runs the two-expert composition. `images` holds the n_context context views
// first and the target views after them. The posed protocol bypasses the
// geometry expert and feeds gt_poses directly to the appearance expert
// (MissingOracle when absent); pose_free uses estimated poses for context and
// target views alike. The provenance text records both expert specs, the
// protocol, and FNV-1a hashes of the inputs, and is sufficient to re-run the
// pipeline bit-identically via run_pipeline_from_provenance.
PipelineResult run_pipeline(const GeometryExpertSpec& geo, const AppearanceExpertSpec& app,
                            const std::vector<ImageBuffer>& images, int n_context,
                            Protocol protocol, const std::vector<CameraPose>& gt_poses,
                            const std::vector<DepthMap>& depth_priors = {});

// Rebuilds the expert specs and protocol recorded in a provenance text and
// re-runs the pipeline on the same in-memory inputs. Throws ParseError when a
// required key is missing or malformed, HashMismatch when the recorded input
// hashes do not match the supplied inputs.
PipelineResult run_pipeline_from_provenance(const std::string& provenance,
                                            const std::vector<ImageBuffer>& images,
                                            const std::vector<CameraPose>& gt_poses,
                                            const std::vector<DepthMap>& depth_priors = {});

// Input hashes used in provenance records (FNV-1a over dimensions + raw
// little-endian payload of each element in order).
std::uint64_t hash_images(const std::vector<ImageBuffer>& images);
std::uint64_t hash_depths(const std::vector<DepthMap>& depths);
std::uint64_t hash_poses(const std::vector<CameraPose>& poses);

}  // namespace splatlab
