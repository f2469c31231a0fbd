#pragma once

#include "vfield/types.hpp"

#include <string>
#include <vector>

namespace vfield {

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit length
  int row = 0;
  int col = 0;
};

/// Pinhole camera, OpenCV axes (x right, y down, z forward), camera-to-world
/// pose. Pixel (row, col) rays pass through the pixel center (col + 0.5,
/// row + 0.5).
struct Camera {
  Real fx = 1.0, fy = 1.0, cx = 0.5, cy = 0.5;
  int width = 1, height = 1;
  Mat3 rotation = Mat3::Identity();  // camera-to-world
  Vec3 translation = Vec3::Zero();

  Ray ray(int row, int col) const;

  /// All pixel rays in row-major order (index = row * width + col).
  std::vector<Ray> all_rays() const;

  std::vector<std::string> validate() const;

  /// Camera at `position` looking toward `target` with `up` fixing the roll.
  static Camera look_at(const Vec3& position, const Vec3& target, const Vec3& up, Real fx, Real fy,
                        int width, int height);

  /// Square-pixel intrinsics from a horizontal field of view in degrees.
  static Real focal_from_hfov(Real hfov_deg, int width);
};

}  // namespace vfield
