#include "vfield/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace vfield {
namespace {

constexpr char kDepthMagic[8] = {'V', 'F', 'D', 'E', 'P', 'T', 'H', '1'};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

std::uint8_t quantize(Real v) {
  const Real c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                             static_cast<std::uint8_t>(v >> 16),
                             static_cast<std::uint8_t>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_ppm(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<std::uint8_t> bytes(static_cast<size_t>(image.pixels()) * 3);
  for (Eigen::Index i = 0; i < image.pixels(); ++i) {
    bytes[3 * i + 0] = quantize(image.rgb(0, i));
    bytes[3 * i + 1] = quantize(image.rgb(1, i));
    bytes[3 * i + 2] = quantize(image.rgb(2, i));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(path, "write failed");
}

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::string magic;
  in >> magic;
  if (magic != "P6") fail(path, "not a binary PPM (P6)");
  int width = 0, height = 0, maxval = 0;
  in >> width >> height >> maxval;
  if (!in || width <= 0 || height <= 0) fail(path, "bad PPM header");
  if (maxval != 255) fail(path, "only 8-bit PPM supported");
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> bytes(static_cast<size_t>(width) * height * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) fail(path, "truncated pixel data");
  Image img = Image::zeros(width, height);
  for (Eigen::Index i = 0; i < img.pixels(); ++i) {
    img.rgb(0, i) = bytes[3 * i + 0] / 255.0;
    img.rgb(1, i) = bytes[3 * i + 1] / 255.0;
    img.rgb(2, i) = bytes[3 * i + 2] / 255.0;
  }
  return img;
}

void write_depth(const std::string& path, const DepthMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out.write(kDepthMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(map.width));
  put_u32(out, static_cast<std::uint32_t>(map.height));
  std::vector<float> data(static_cast<size_t>(map.depth.size()));
  for (Eigen::Index i = 0; i < map.depth.size(); ++i) data[i] = static_cast<float>(map.depth[i]);
  static_assert(sizeof(float) == 4);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * 4));
  if (!out) fail(path, "write failed");
}

DepthMap read_depth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kDepthMagic, 8) != 0) fail(path, "bad depth raster magic");
  const std::uint32_t width = get_u32(in);
  const std::uint32_t height = get_u32(in);
  if (!in || width == 0 || height == 0) fail(path, "bad depth raster header");
  std::vector<float> data(static_cast<size_t>(width) * height);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * 4));
  if (!in) fail(path, "truncated depth data");
  DepthMap map = DepthMap::zeros(static_cast<int>(width), static_cast<int>(height));
  for (size_t i = 0; i < data.size(); ++i) map.depth[static_cast<Eigen::Index>(i)] = data[i];
  return map;
}

}  // namespace vfield
