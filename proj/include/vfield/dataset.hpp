#pragma once

#include <string>
#include <vector>

#include "vfield/camera.hpp"
#include "vfield/geometry.hpp"
#include "vfield/image.hpp"

namespace vfield {

/// One posed RGB-D view. Depth stores ray distance t (not z-depth); pixels
/// that miss every primitive carry the far-plane sentinel.
struct DatasetView {
  Camera camera;
  Image image;
  DepthMap depth;
};

struct Dataset {
  std::vector<DatasetView> views;
};

/// Raycasts every pixel of every camera. Deterministic: the images are
/// analytic functions of scene and pose.
Dataset render_dataset(const Scene& scene, const std::vector<Camera>& cameras);

/// Writes view_###.ppm / view_###.depth plus manifest.txt into `dir`
/// (created if missing). Images are written before the manifest and the
/// manifest write is atomic, so a failed run never leaves a manifest that
/// references missing files.
///
/// Manifest schema — one view per line, paths relative to the manifest and
/// free of whitespace:
///
///   view <image> <depth> <width> <height> <fx> <fy> <cx> <cy>
///        <r00 r01 r02 tx  r10 r11 r12 ty  r20 r21 r22 tz>
///
/// (a single line; wrapped here for readability)
///
/// The 12 trailing numbers are the row-major 3x4 camera-to-world matrix.
void save_dataset(const std::string& dir, const Dataset& dataset);

/// Loads a manifest written by save_dataset (or by hand following the schema).
Dataset load_dataset(const std::string& manifest_path);

std::string manifest_path_for(const std::string& dir);

}  // namespace vfield
