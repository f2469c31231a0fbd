#include "vfield/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "vfield/textio.hpp"

namespace vfield {
namespace {

std::string view_basename(size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%03zu", index);
  return buf;
}

void append_real(std::ostringstream& out, Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << " " << buf;
}

}  // namespace

Dataset render_dataset(const Scene& scene, const std::vector<Camera>& cameras) {
  if (cameras.empty()) throw std::runtime_error("render_dataset: no cameras");
  Dataset dataset;
  dataset.views.reserve(cameras.size());
  for (const Camera& camera : cameras) {
    DatasetView view;
    view.camera = camera;
    view.image = Image::zeros(camera.width, camera.height);
    view.depth = DepthMap::zeros(camera.width, camera.height);
    for (int row = 0; row < camera.height; ++row) {
      for (int col = 0; col < camera.width; ++col) {
        const Ray ray = camera.ray(row, col);
        const RaycastHit hit = raycast(scene, ray.origin, ray.dir);
        const Eigen::Index pixel = static_cast<Eigen::Index>(row) * camera.width + col;
        view.image.rgb.col(pixel) = hit.rgb;
        view.depth.depth[pixel] = hit.t;
      }
    }
    dataset.views.push_back(std::move(view));
  }
  return dataset;
}

std::string manifest_path_for(const std::string& dir) {
  return (std::filesystem::path(dir) / "manifest.txt").string();
}

void save_dataset(const std::string& dir, const Dataset& dataset) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ostringstream manifest;
  manifest << "# vfield dataset manifest\n"
           << "# view <image> <depth> <width> <height> <fx> <fy> <cx> <cy> "
              "<row-major 3x4 camera-to-world>\n";
  for (size_t i = 0; i < dataset.views.size(); ++i) {
    const DatasetView& view = dataset.views[i];
    const std::string base = view_basename(i);
    write_ppm((fs::path(dir) / (base + ".ppm")).string(), view.image);
    write_depth((fs::path(dir) / (base + ".depth")).string(), view.depth);
    manifest << "view " << base << ".ppm " << base << ".depth " << view.camera.width << " "
             << view.camera.height;
    std::ostringstream numbers;
    append_real(numbers, view.camera.fx);
    append_real(numbers, view.camera.fy);
    append_real(numbers, view.camera.cx);
    append_real(numbers, view.camera.cy);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) append_real(numbers, view.camera.rotation(r, c));
      append_real(numbers, view.camera.translation[r]);
    }
    manifest << numbers.str() << "\n";
  }
  write_text_file_atomic(manifest_path_for(dir), manifest.str());
}

Dataset load_dataset(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(manifest_path).parent_path();
  Dataset dataset;
  for (const TextLine& line : tokenize_lines(read_text_file(manifest_path))) {
    LineParser parser(manifest_path, line);
    if (parser.keyword() != "view") parser.fail("unknown manifest keyword");
    const std::string image_rel = parser.next_token("image path");
    const std::string depth_rel = parser.next_token("depth path");
    DatasetView view;
    view.camera.width = parser.next_int("width");
    view.camera.height = parser.next_int("height");
    view.camera.fx = parser.next_real("fx");
    view.camera.fy = parser.next_real("fy");
    view.camera.cx = parser.next_real("cx");
    view.camera.cy = parser.next_real("cy");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) view.camera.rotation(r, c) = parser.next_real("pose rotation");
      view.camera.translation[r] = parser.next_real("pose translation");
    }
    parser.expect_end();
    const std::vector<std::string> problems = view.camera.validate();
    if (!problems.empty()) parser.fail("invalid camera: " + problems.front());
    view.image = read_ppm((dir / image_rel).string());
    view.depth = read_depth((dir / depth_rel).string());
    if (view.image.width != view.camera.width || view.image.height != view.camera.height) {
      parser.fail("image size does not match manifest intrinsics");
    }
    if (view.depth.width != view.camera.width || view.depth.height != view.camera.height) {
      parser.fail("depth size does not match manifest intrinsics");
    }
    dataset.views.push_back(std::move(view));
  }
  if (dataset.views.empty()) {
    throw std::runtime_error(manifest_path + ": manifest lists no views");
  }
  return dataset;
}

}  // namespace vfield
