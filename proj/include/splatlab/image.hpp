#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace splatlab {

// H x W x 3 image, row-major, channel-interleaved, double precision in
// memory. Values are expected in [0,1] for display; out-of-range values are
// only clamped on 8-bit write-out, never in memory. File formats use f32
// (PFM) or 8-bit (PPM).
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;  // size = width * height * 3

  ImageBuffer() = default;
  ImageBuffer(int w, int h, double fill = 0.0)
      : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, fill) {}

  double& at(int y, int x, int c) { return rgb[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const {
    return rgb[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  bool same_shape(const ImageBuffer& other) const {
    return width == other.width && height == other.height;
  }
};

// Single-channel map (used for depth priors). Same layout conventions as
// ImageBuffer.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // size = width * height

  DepthMap() = default;
  DepthMap(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

  double& at(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }
  double at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
};

// Binary PPM (P6, maxval 255). Values are clamped to [0,1] and quantized with
// round-half-to-even.
void write_ppm(std::ostream& out, const ImageBuffer& image);
void write_ppm_file(const std::string& path, const ImageBuffer& image);
ImageBuffer read_ppm(std::istream& in);
ImageBuffer read_ppm_file(const std::string& path);

// PFM, little-endian f32 (header scale -1.0), scanlines bottom-up per the
// format convention. "PF" = 3-channel, "Pf" = 1-channel. No clamping; values
// are cast to f32 on write, so a write/read cycle of a file is bit-stable.
void write_pfm(std::ostream& out, const ImageBuffer& image);
void write_pfm_file(const std::string& path, const ImageBuffer& image);
ImageBuffer read_pfm(std::istream& in);
ImageBuffer read_pfm_file(const std::string& path);

void write_depth_pfm(std::ostream& out, const DepthMap& depth);
void write_depth_pfm_file(const std::string& path, const DepthMap& depth);
DepthMap read_depth_pfm(std::istream& in);
DepthMap read_depth_pfm_file(const std::string& path);

}  // namespace splatlab
