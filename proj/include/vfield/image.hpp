#pragma once

#include "vfield/types.hpp"

#include <string>

namespace vfield {

/// RGB image, values in [0,1], one column per pixel in row-major pixel order
/// (column index = row * width + col, row 0 at the top).
struct Image {
  int width = 0;
  int height = 0;
  Mat3X rgb;

  static Image zeros(int width, int height) {
    Image img;
    img.width = width;
    img.height = height;
    img.rgb = Mat3X::Zero(3, static_cast<Eigen::Index>(width) * height);
    return img;
  }
  Eigen::Index pixels() const { return rgb.cols(); }
};

/// Depth raster, meters, same pixel order as Image.
struct DepthMap {
  int width = 0;
  int height = 0;
  Vec depth;

  static DepthMap zeros(int width, int height) {
    DepthMap d;
    d.width = width;
    d.height = height;
    d.depth = Vec::Zero(static_cast<Eigen::Index>(width) * height);
    return d;
  }
};

// Binary PPM (P6), 8 bits per channel. Values are clamped and rounded.
void write_ppm(const std::string& path, const Image& image);
Image read_ppm(const std::string& path);

// Raw float32 raster: 16-byte header (8-byte magic "VFDEPTH1", u32 width,
// u32 height, little-endian) followed by width*height little-endian f32
// values in row-major order. Bit-exact across platforms.
void write_depth(const std::string& path, const DepthMap& map);
DepthMap read_depth(const std::string& path);

}  // namespace vfield
