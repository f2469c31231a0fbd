#include "vfield/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace vfield {

Ray Camera::ray(int row, int col) const {
  const Real u = (static_cast<Real>(col) + 0.5 - cx) / fx;
  const Real v = (static_cast<Real>(row) + 0.5 - cy) / fy;
  Vec3 d_cam(u, v, 1.0);
  Vec3 d_world = rotation * d_cam;
  d_world.normalize();
  return {translation, d_world, row, col};
}

std::vector<Ray> Camera::all_rays() const {
  std::vector<Ray> rays;
  rays.reserve(static_cast<size_t>(width) * height);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) rays.push_back(ray(r, c));
  return rays;
}

std::vector<std::string> Camera::validate() const {
  std::vector<std::string> problems;
  if (!(fx > 0.0) || !(fy > 0.0)) problems.push_back("camera focal lengths must be positive");
  if (width < 1 || height < 1) problems.push_back("camera resolution must be at least 1x1");
  const Mat3 gram = rotation.transpose() * rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    problems.push_back("camera rotation is not orthonormal");
  return problems;
}

Camera Camera::look_at(const Vec3& position, const Vec3& target, const Vec3& up, Real fx, Real fy,
                       int width, int height) {
  Vec3 forward = target - position;
  const Real n = forward.norm();
  if (n < kNormFloor) throw std::invalid_argument("look_at: target coincides with position");
  forward /= n;
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9) {
    // looking along up: fall back to an arbitrary horizontal right axis
    right = forward.cross(Vec3(1, 0, 0));
    if (right.norm() < 1e-9) right = forward.cross(Vec3(0, 1, 0));
  }
  right.normalize();
  const Vec3 down = forward.cross(right).normalized();

  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = width * 0.5;
  cam.cy = height * 0.5;
  cam.width = width;
  cam.height = height;
  cam.rotation.col(0) = right;
  cam.rotation.col(1) = down;
  cam.rotation.col(2) = forward;
  cam.translation = position;
  return cam;
}

Real Camera::focal_from_hfov(Real hfov_deg, int width) {
  const Real half = 0.5 * hfov_deg * kPi / 180.0;
  if (!(half > 0.0) || half >= 0.5 * kPi)
    throw std::invalid_argument("field of view must be in (0, 180) degrees");
  return 0.5 * width / std::tan(half);
}

}  // namespace vfield
