#include "splatlab/metrics.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "splatlab/error.hpp"

namespace splatlab {

namespace {

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;
constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

void check_shape(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) fail(ErrorKind::ShapeMismatch, "image dimensions differ");
}

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  check_shape(a, b);
  double sum = 0.0;
  for (size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = a.rgb[i] - b.rgb[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.rgb.size());
  if (mse < 1e-10) return 100.0;
  return -10.0 * std::log10(mse);
}

namespace {

// Horizontal then vertical valid-region convolution with a normalized kernel.
// in: h x w plane; out: (h - n + 1) x (w - n + 1).
void separable_valid(const std::vector<double>& in, int w, int h,
                     const std::vector<double>& kernel, std::vector<double>& tmp,
                     std::vector<double>& out) {
  const int n = static_cast<int>(kernel.size());
  const int ow = w - n + 1, oh = h - n + 1;
  tmp.assign(static_cast<size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += kernel[static_cast<size_t>(k)] * in[static_cast<size_t>(y) * w + x + k];
      tmp[static_cast<size_t>(y) * ow + x] = s;
    }
  }
  out.assign(static_cast<size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += kernel[static_cast<size_t>(k)] * tmp[static_cast<size_t>(y + k) * ow + x];
      out[static_cast<size_t>(y) * ow + x] = s;
    }
  }
}

}  // namespace

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  check_shape(a, b);
  const int w = a.width, h = a.height;
  if (w < kSsimWindow || h < kSsimWindow) {
    fail(ErrorKind::TooSmall, "image smaller than the 11x11 SSIM window");
  }

  std::vector<double> kernel(kSsimWindow);
  {
    double sum = 0.0;
    const double c = (kSsimWindow - 1) / 2.0;
    for (int k = 0; k < kSsimWindow; ++k) {
      const double d = k - c;
      kernel[static_cast<size_t>(k)] = std::exp(-0.5 * d * d / (kSsimSigma * kSsimSigma));
      sum += kernel[static_cast<size_t>(k)];
    }
    for (double& v : kernel) v /= sum;
  }

  const size_t plane = static_cast<size_t>(w) * h;
  std::vector<double> pa(plane), pb(plane), paa(plane), pbb(plane), pab(plane);
  std::vector<double> tmp, mu_a, mu_b, e_aa, e_bb, e_ab;
  double total = 0.0;
  long count = 0;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double va = a.at(y, x, c);
        const double vb = b.at(y, x, c);
        const size_t i = static_cast<size_t>(y) * w + x;
        pa[i] = va;
        pb[i] = vb;
        paa[i] = va * va;
        pbb[i] = vb * vb;
        pab[i] = va * vb;
      }
    }
    separable_valid(pa, w, h, kernel, tmp, mu_a);
    separable_valid(pb, w, h, kernel, tmp, mu_b);
    separable_valid(paa, w, h, kernel, tmp, e_aa);
    separable_valid(pbb, w, h, kernel, tmp, e_bb);
    separable_valid(pab, w, h, kernel, tmp, e_ab);
    for (size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double var_a = e_aa[i] - ma * ma;
      const double var_b = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      const double val = ((2.0 * ma * mb + kSsimC1) * (2.0 * cov + kSsimC2)) /
                         ((ma * ma + mb * mb + kSsimC1) * (var_a + var_b + kSsimC2));
      total += val;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

std::vector<PoseErrorSample> pairwise_pose_errors(const std::vector<CameraPose>& pred,
                                                  const std::vector<CameraPose>& gt) {
  if (pred.size() != gt.size()) {
    fail(ErrorKind::LengthMismatch, "predicted/ground-truth pose lists differ in length");
  }
  if (pred.size() < 2) fail(ErrorKind::TooFewViews, "pairwise errors need at least 2 views");
  for (const CameraPose& p : pred) p.validate();
  for (const CameraPose& p : gt) p.validate();

  const int n = static_cast<int>(pred.size());
  std::vector<PoseErrorSample> out;
  out.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const RelativePose rp = relative_pose(pred[static_cast<size_t>(i)], pred[static_cast<size_t>(j)]);
      const RelativePose rg = relative_pose(gt[static_cast<size_t>(i)], gt[static_cast<size_t>(j)]);
      PoseErrorSample s;
      s.i = i;
      s.j = j;
      s.rot_err_deg = rotation_geodesic_angle(rp.rotation, rg.rotation) * kRadToDeg;
      const double na = rp.translation.norm();
      const double nb = rg.translation.norm();
      if (na < 1e-9 && nb < 1e-9) {
        s.trans_angle_err_deg = 0.0;
      } else if (na < 1e-9 || nb < 1e-9) {
        s.trans_angle_err_deg = 180.0;
      } else {
        const double cross = rp.translation.cross(rg.translation).norm();
        const double dot = rp.translation.dot(rg.translation);
        s.trans_angle_err_deg = std::atan2(cross, dot) * kRadToDeg;
      }
      out.push_back(s);
    }
  }
  return out;
}

std::vector<double> pose_auc(const std::vector<double>& errors_deg,
                             const std::vector<double>& thresholds_deg) {
  if (errors_deg.empty()) fail(ErrorKind::EmptyErrorList, "no pose errors to integrate");
  for (const double e : errors_deg) {
    if (!std::isfinite(e)) fail(ErrorKind::NonFiniteValue, "pose error is not finite");
    if (e < 0.0) fail(ErrorKind::InvalidConfig, "pose errors must be non-negative");
  }
  std::vector<double> out;
  out.reserve(thresholds_deg.size());
  const double m = static_cast<double>(errors_deg.size());
  for (const double tau : thresholds_deg) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
      fail(ErrorKind::InvalidConfig, "AUC threshold must be positive and finite");
    }
    // Exact integral of the empirical CDF step function over [0, tau]:
    // each error e <= tau contributes (tau - e) / (M * tau).
    double sum = 0.0;
    for (const double e : errors_deg) {
      if (e <= tau) sum += tau - e;
    }
    out.push_back(sum / (m * tau));
  }
  return out;
}

void MetricReport::finalize_means() {
  mean_psnr = 0.0;
  mean_ssim = 0.0;
  if (!per_view_psnr.empty()) {
    for (const double v : per_view_psnr) mean_psnr += v;
    mean_psnr /= static_cast<double>(per_view_psnr.size());
  }
  if (!per_view_ssim.empty()) {
    for (const double v : per_view_ssim) mean_ssim += v;
    mean_ssim /= static_cast<double>(per_view_ssim.size());
  }
}

namespace {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string auc_column_name(double t) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "auc@%g", t);
  return buf;
}

}  // namespace

std::string metric_csv_header(const MetricReport& r) {
  std::ostringstream out;
  out << "method,views,psnr,ssim,auc_basis";
  for (const double t : r.auc_thresholds) out << ',' << auc_column_name(t);
  return out.str();
}

std::string metric_csv_row(const MetricReport& r) {
  std::ostringstream out;
  out << r.method << ',' << r.context_views << ',' << format_g17(r.mean_psnr) << ','
      << format_g17(r.mean_ssim) << ',' << (r.auc_uses_max_error ? "max" : "rot");
  for (const double v : r.auc_values) out << ',' << format_g17(v);
  return out.str();
}

std::string metric_csv(const std::vector<MetricReport>& rows) {
  if (rows.empty()) return "";
  for (const MetricReport& r : rows) {
    if (r.auc_thresholds != rows.front().auc_thresholds) {
      fail(ErrorKind::InvalidConfig, "metric rows disagree on AUC thresholds");
    }
    if (r.auc_values.size() != r.auc_thresholds.size()) {
      fail(ErrorKind::ShapeMismatch, "AUC values do not match thresholds");
    }
  }
  std::ostringstream out;
  out << metric_csv_header(rows.front()) << '\n';
  for (const MetricReport& r : rows) out << metric_csv_row(r) << '\n';
  return out.str();
}

std::string metric_table(const std::vector<MetricReport>& rows) {
  if (rows.empty()) return "";
  for (const MetricReport& r : rows) {
    if (r.auc_thresholds != rows.front().auc_thresholds) {
      fail(ErrorKind::InvalidConfig, "metric rows disagree on AUC thresholds");
    }
  }
  std::vector<std::string> headers = {"method", "views", "PSNR", "SSIM"};
  for (const double t : rows.front().auc_thresholds) {
    headers.push_back(auc_column_name(t) +
                      std::string(rows.front().auc_uses_max_error ? "(max)" : "(rot)"));
  }
  std::vector<std::vector<std::string>> cells;
  for (const MetricReport& r : rows) {
    std::vector<std::string> row;
    row.push_back(r.method);
    row.push_back(std::to_string(r.context_views));
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", r.mean_psnr);
    row.push_back(buf);
    std::snprintf(buf, sizeof(buf), "%.3f", r.mean_ssim);
    row.push_back(buf);
    for (const double v : r.auc_values) {
      std::snprintf(buf, sizeof(buf), "%.3f", v);
      row.push_back(buf);
    }
    cells.push_back(std::move(row));
  }
  std::vector<size_t> widths(headers.size());
  for (size_t c = 0; c < headers.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& row : cells) {
      if (c < row.size()) widths[c] = std::max(widths[c], row[c].size());
    }
  }
  std::ostringstream out;
  auto emit_row = [&](const std::vector<std::string>& row) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      out << row[c];
      for (size_t pad = row[c].size(); pad < widths[c]; ++pad) out << ' ';
    }
    out << '\n';
  };
  emit_row(headers);
  {
    std::vector<std::string> rule;
    for (const size_t w : widths) rule.push_back(std::string(w, '-'));
    emit_row(rule);
  }
  for (const auto& row : cells) emit_row(row);
  return out.str();
}

}  // namespace splatlab
