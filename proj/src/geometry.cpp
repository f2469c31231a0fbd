#include "vfield/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace vfield {

Vec3 Albedo::eval(const Vec3& p) const {
  if (kind == Kind::Constant) return color_a;
  const auto idx = [&](int axis) { return static_cast<long long>(std::floor(p[axis] / cell)); };
  const bool odd = ((idx(0) + idx(1) + idx(2)) & 1ll) != 0;
  return odd ? color_b : color_a;
}

Primitive Primitive::plane(const Vec3& n, Real offset, Albedo a) {
  Primitive p;
  p.kind = Kind::Plane;
  p.normal = n;
  p.offset = offset;
  p.albedo = a;
  return p;
}

Primitive Primitive::sphere(const Vec3& c, Real r, Albedo a) {
  Primitive p;
  p.kind = Kind::Sphere;
  p.center = c;
  p.radius = r;
  p.albedo = a;
  return p;
}

Primitive Primitive::box(const Vec3& lo, const Vec3& hi, Albedo a) {
  Primitive p;
  p.kind = Kind::Box;
  p.box_min = lo;
  p.box_max = hi;
  p.albedo = a;
  return p;
}

void Primitive::closest_point(const Vec3& x, Vec3& on_surface, Vec3& outward) const {
  switch (kind) {
    case Kind::Plane: {
      const Real s = normal.dot(x) - offset;
      on_surface = x - s * normal;
      outward = normal;
      return;
    }
    case Kind::Sphere: {
      Vec3 radial = x - center;
      Real n = radial.norm();
      if (n < kNormFloor) radial = Vec3(1, 0, 0), n = 1.0;  // center query: pick a fixed axis
      outward = radial / n;
      on_surface = center + radius * outward;
      return;
    }
    case Kind::Box: {
      const Vec3 clamped = x.cwiseMax(box_min).cwiseMin(box_max);
      if ((clamped - x).squaredNorm() > 0.0) {
        // outside: clamping lands on the surface
        on_surface = clamped;
        Vec3 d = x - clamped;
        const Real n = d.norm();
        outward = n > kNormFloor ? Vec3(d / n) : Vec3(0, 0, 1);
        return;
      }
      // inside: project onto the nearest face (lowest axis, min side first on ties)
      int best_axis = 0;
      bool best_min_side = true;
      Real best = infinity();
      for (int axis = 0; axis < 3; ++axis) {
        const Real to_min = x[axis] - box_min[axis];
        const Real to_max = box_max[axis] - x[axis];
        if (to_min < best) best = to_min, best_axis = axis, best_min_side = true;
        if (to_max < best) best = to_max, best_axis = axis, best_min_side = false;
      }
      on_surface = x;
      outward = Vec3::Zero();
      if (best_min_side) {
        on_surface[best_axis] = box_min[best_axis];
        outward[best_axis] = -1.0;
      } else {
        on_surface[best_axis] = box_max[best_axis];
        outward[best_axis] = 1.0;
      }
      return;
    }
  }
  throw std::logic_error("unknown primitive kind");
}

std::optional<Real> Primitive::raycast(const Vec3& origin, const Vec3& dir, Real t_min,
                                       Real t_max) const {
  switch (kind) {
    case Kind::Plane: {
      const Real denom = normal.dot(dir);
      if (std::abs(denom) < 1e-14) return std::nullopt;
      const Real t = (offset - normal.dot(origin)) / denom;
      if (t >= t_min && t <= t_max) return t;
      return std::nullopt;
    }
    case Kind::Sphere: {
      const Vec3 oc = origin - center;
      const Real b = oc.dot(dir);
      const Real c = oc.squaredNorm() - radius * radius;
      const Real disc = b * b - c;
      if (disc < 0.0) return std::nullopt;
      const Real root = std::sqrt(disc);
      for (const Real t : {-b - root, -b + root}) {
        if (t >= t_min && t <= t_max) return t;
      }
      return std::nullopt;
    }
    case Kind::Box: {
      Real t_enter = -infinity();
      Real t_exit = infinity();
      for (int axis = 0; axis < 3; ++axis) {
        if (std::abs(dir[axis]) < 1e-14) {
          if (origin[axis] < box_min[axis] || origin[axis] > box_max[axis]) return std::nullopt;
          continue;
        }
        Real t0 = (box_min[axis] - origin[axis]) / dir[axis];
        Real t1 = (box_max[axis] - origin[axis]) / dir[axis];
        if (t0 > t1) std::swap(t0, t1);
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
      }
      if (t_enter > t_exit) return std::nullopt;
      // origin inside the box hits the inner surface at t_exit
      for (const Real t : {t_enter, t_exit}) {
        if (t >= t_min && t <= t_max) return t;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::vector<std::string> Scene::validate() const {
  std::vector<std::string> problems;
  if (primitives.empty()) problems.push_back("scene has no primitives");
  for (size_t i = 0; i < primitives.size(); ++i) {
    const Primitive& p = primitives[i];
    const std::string tag = "primitive " + std::to_string(i) + ": ";
    switch (p.kind) {
      case Primitive::Kind::Plane:
        if (std::abs(p.normal.norm() - 1.0) > 1e-12)
          problems.push_back(tag + "plane normal is not unit length (|n| = " +
                             std::to_string(p.normal.norm()) + ")");
        break;
      case Primitive::Kind::Sphere:
        if (!(p.radius > 0.0)) problems.push_back(tag + "sphere radius must be positive");
        break;
      case Primitive::Kind::Box:
        if (!(p.box_min.array() < p.box_max.array()).all())
          problems.push_back(tag + "box min must be below max componentwise");
        break;
    }
  }
  if (!(c_scene.array() >= bounds_min.array()).all() ||
      !(c_scene.array() <= bounds_max.array()).all())
    problems.push_back("scene center lies outside bounds");
  if (!(near >= 0.0) || !(near < far)) problems.push_back("requires 0 <= near < far");
  return problems;
}

SurfaceQuery nearest_surface_point(const Scene& scene, const Vec3& x) {
  if (scene.primitives.empty()) throw std::invalid_argument("nearest_surface_point: empty scene");
  SurfaceQuery best;
  best.distance = infinity();
  best.primitive = -1;
  for (size_t i = 0; i < scene.primitives.size(); ++i) {
    Vec3 p, n;
    scene.primitives[i].closest_point(x, p, n);
    const Real d = (x - p).norm();
    if (d < best.distance) {  // strict: ties keep the lowest index
      best.point = p;
      best.distance = d;
      best.primitive = static_cast<int>(i);
      best.outward = n;
    }
  }
  return best;
}

FieldSample oracle_vf(const Scene& scene, const Vec3& x) {
  const SurfaceQuery q = nearest_surface_point(scene, x);
  if (q.distance < 1e-9) return {-q.outward, true};
  return {(q.point - x) / q.distance, false};
}

Mat3X oracle_vf_batch(const Scene& scene, const Mat3X& positions) {
  Mat3X out(3, positions.cols());
  for (Eigen::Index i = 0; i < positions.cols(); ++i) {
    out.col(i) = oracle_vf(scene, positions.col(i)).v;
  }
  return out;
}

RaycastHit raycast(const Scene& scene, const Vec3& origin, const Vec3& dir) {
  RaycastHit out;
  out.t = scene.far;
  out.rgb = scene.background;
  Real best = scene.far;
  for (size_t i = 0; i < scene.primitives.size(); ++i) {
    if (auto t = scene.primitives[i].raycast(origin, dir, scene.near, best)) {
      if (*t < best || !out.hit) {  // ties keep the lowest index
        best = *t;
        out.hit = true;
        out.primitive = static_cast<int>(i);
      }
    }
  }
  if (out.hit) {
    out.t = best;
    const Vec3 p = origin + best * dir;
    out.rgb = scene.primitives[out.primitive].albedo.eval(p);
  }
  return out;
}

Vec3 oracle_color(const Scene& scene, const Vec3& x) {
  const SurfaceQuery q = nearest_surface_point(scene, x);
  return scene.primitives[q.primitive].albedo.eval(q.point);
}

}  // namespace vfield
