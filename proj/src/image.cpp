#include "splatlab/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "splatlab/error.hpp"

namespace splatlab {

namespace {

uint8_t quantize8(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  // nearbyint under the default FE_TONEAREST mode rounds half to even.
  return static_cast<uint8_t>(std::nearbyint(clamped * 255.0));
}

void check_shape(int width, int height) {
  if (width <= 0 || height <= 0) {
    fail(ErrorKind::ShapeMismatch, "image dimensions must be positive");
  }
}

// Reads one whitespace-delimited token, skipping PNM `#` comments.
std::string next_pnm_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

template <typename T>
T parse_pnm_int(std::istream& in, const char* what) {
  const std::string tok = next_pnm_token(in);
  try {
    return static_cast<T>(std::stoll(tok));
  } catch (...) {
    fail(ErrorKind::IoError, std::string("bad PNM field: ") + what);
  }
}

void write_row_f32(std::ostream& out, const double* data, size_t count) {
  std::vector<float> row(count);
  for (size_t i = 0; i < count; ++i) row[i] = static_cast<float>(data[i]);
  out.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(count * 4));
}

void read_row_f32(std::istream& in, double* data, size_t count) {
  std::vector<float> row(count);
  in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(count * 4));
  if (!in) fail(ErrorKind::IoError, "truncated PFM payload");
  for (size_t i = 0; i < count; ++i) data[i] = static_cast<double>(row[i]);
}

struct PfmHeader {
  bool color = false;
  int width = 0, height = 0;
};

PfmHeader read_pfm_header(std::istream& in) {
  PfmHeader h;
  std::string magic;
  in >> magic;
  if (magic == "PF") {
    h.color = true;
  } else if (magic == "Pf") {
    h.color = false;
  } else {
    fail(ErrorKind::IoError, "not a PFM stream");
  }
  double scale = 0.0;
  if (!(in >> h.width >> h.height >> scale)) {
    fail(ErrorKind::IoError, "malformed PFM header");
  }
  if (h.width <= 0 || h.height <= 0) fail(ErrorKind::IoError, "bad PFM dimensions");
  if (!(scale < 0.0)) fail(ErrorKind::IoError, "big-endian PFM not supported");
  in.get();  // single whitespace byte after the scale line
  return h;
}

void write_pfm_header(std::ostream& out, bool color, int width, int height) {
  out << (color ? "PF" : "Pf") << '\n' << width << ' ' << height << '\n' << "-1.0" << '\n';
}

}  // namespace

void write_ppm(std::ostream& out, const ImageBuffer& image) {
  check_shape(image.width, image.height);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(image.width) * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        row[static_cast<size_t>(x) * 3 + c] = quantize8(image.at(y, x, c));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

ImageBuffer read_ppm(std::istream& in) {
  const std::string magic = next_pnm_token(in);
  if (magic != "P6") fail(ErrorKind::IoError, "not a binary PPM stream");
  const int width = parse_pnm_int<int>(in, "width");
  const int height = parse_pnm_int<int>(in, "height");
  const int maxval = parse_pnm_int<int>(in, "maxval");
  if (width <= 0 || height <= 0 || maxval != 255) {
    fail(ErrorKind::IoError, "unsupported PPM geometry or maxval");
  }
  ImageBuffer image(width, height);
  std::vector<uint8_t> row(static_cast<size_t>(width) * 3);
  for (int y = 0; y < height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) fail(ErrorKind::IoError, "truncated PPM payload");
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        image.at(y, x, c) = static_cast<double>(row[static_cast<size_t>(x) * 3 + c]) / 255.0;
      }
    }
  }
  return image;
}

void write_pfm(std::ostream& out, const ImageBuffer& image) {
  check_shape(image.width, image.height);
  write_pfm_header(out, true, image.width, image.height);
  // bottom-up scanlines
  for (int y = image.height - 1; y >= 0; --y) {
    write_row_f32(out, &image.rgb[static_cast<size_t>(y) * image.width * 3],
                  static_cast<size_t>(image.width) * 3);
  }
}

ImageBuffer read_pfm(std::istream& in) {
  const PfmHeader h = read_pfm_header(in);
  if (!h.color) fail(ErrorKind::IoError, "expected 3-channel PFM");
  ImageBuffer image(h.width, h.height);
  for (int y = h.height - 1; y >= 0; --y) {
    read_row_f32(in, &image.rgb[static_cast<size_t>(y) * h.width * 3],
                 static_cast<size_t>(h.width) * 3);
  }
  return image;
}

void write_depth_pfm(std::ostream& out, const DepthMap& depth) {
  check_shape(depth.width, depth.height);
  write_pfm_header(out, false, depth.width, depth.height);
  for (int y = depth.height - 1; y >= 0; --y) {
    write_row_f32(out, &depth.values[static_cast<size_t>(y) * depth.width],
                  static_cast<size_t>(depth.width));
  }
}

DepthMap read_depth_pfm(std::istream& in) {
  const PfmHeader h = read_pfm_header(in);
  if (h.color) fail(ErrorKind::IoError, "expected 1-channel PFM");
  DepthMap depth(h.width, h.height);
  for (int y = h.height - 1; y >= 0; --y) {
    read_row_f32(in, &depth.values[static_cast<size_t>(y) * h.width],
                 static_cast<size_t>(h.width));
  }
  return depth;
}

namespace {

template <typename WriteFn>
void write_binary_file(const std::string& path, WriteFn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot open for writing: " + path);
  fn(out);
  out.flush();
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

std::ifstream open_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open: " + path);
  return in;
}

}  // namespace

void write_ppm_file(const std::string& path, const ImageBuffer& image) {
  write_binary_file(path, [&](std::ostream& out) { write_ppm(out, image); });
}

ImageBuffer read_ppm_file(const std::string& path) {
  auto in = open_binary(path);
  return read_ppm(in);
}

void write_pfm_file(const std::string& path, const ImageBuffer& image) {
  write_binary_file(path, [&](std::ostream& out) { write_pfm(out, image); });
}

ImageBuffer read_pfm_file(const std::string& path) {
  auto in = open_binary(path);
  return read_pfm(in);
}

void write_depth_pfm_file(const std::string& path, const DepthMap& depth) {
  write_binary_file(path, [&](std::ostream& out) { write_depth_pfm(out, depth); });
}

DepthMap read_depth_pfm_file(const std::string& path) {
  auto in = open_binary(path);
  return read_depth_pfm(in);
}

}  // namespace splatlab
