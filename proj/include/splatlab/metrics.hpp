#pragma once

#include <string>
#include <vector>

#include "splatlab/camera.hpp"
#include "splatlab/image.hpp"

namespace splatlab {

// 10 * log10(1 / mse) over all entries, capped at 100 dB when mse < 1e-10.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

// Mean local structural similarity: 11x11 Gaussian window (sigma 1.5),
// C1 = 0.01^2, C2 = 0.03^2 on the [0, 1] range, valid windows only, computed
// per channel and averaged. Symmetric in its arguments. Throws TooSmall when
// either image dimension is below the window size.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

// Relative-pose error for one unordered view pair; the relative poses cancel
// any global rigid gauge.
struct PoseErrorSample {
  int i = 0, j = 0;
  double rot_err_deg = 0.0;          // geodesic angle between relative rotations
  double trans_angle_err_deg = 0.0;  // angle between relative-translation directions
  double max_err_deg() const {
    return rot_err_deg > trans_angle_err_deg ? rot_err_deg : trans_angle_err_deg;
  }
};

// Errors for every unordered pair {i, j}, i < j. The translation direction
// angle is 0 when both relative translations have norm < 1e-9 and 180 when
// exactly one does.
std::vector<PoseErrorSample> pairwise_pose_errors(const std::vector<CameraPose>& pred,
                                                  const std::vector<CameraPose>& gt);

// Area under the cumulative error curve, normalized: AUC@tau integrates the
// fraction of errors <= t over t in [0, tau] exactly (piecewise-constant
// step function), divided by tau. Returns one value per threshold.
std::vector<double> pose_auc(const std::vector<double>& errors_deg,
                             const std::vector<double>& thresholds_deg);

// One evaluated configuration: per-view image quality plus pose AUC.
struct MetricReport {
  std::string method;        // e.g. "posed", "pose_free", "pose_free+epa"
  int context_views = 0;
  std::vector<double> per_view_psnr;
  std::vector<double> per_view_ssim;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::vector<double> auc_thresholds;
  std::vector<double> auc_values;
  bool auc_uses_max_error = true;  // max(rot, trans-angle) vs rotation-only
  int pair_count = 0;

  void finalize_means();  // fills mean_psnr / mean_ssim from the per-view lists
};

// CSV: method,views,psnr,ssim,auc_basis[,auc@<t>...] with 17-significant-digit
// values; all rows must share the same thresholds.
std::string metric_csv_header(const MetricReport& r);
std::string metric_csv_row(const MetricReport& r);
std::string metric_csv(const std::vector<MetricReport>& rows);

// Aligned-column plain-text table (method, views, PSNR, SSIM, AUC columns).
std::string metric_table(const std::vector<MetricReport>& rows);

}  // namespace splatlab
