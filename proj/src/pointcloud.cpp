#include "vfield/pointcloud.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "vfield/rng.hpp"
#include "vfield/textio.hpp"

namespace vfield {
namespace {

constexpr Real kBoundsTolerance = 1e-9;
constexpr int kAreaTrials = 4096;  // Monte-Carlo trials for clipped-area estimates

bool inside_bounds(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  for (int k = 0; k < 3; ++k) {
    if (p[k] < lo[k] - kBoundsTolerance || p[k] > hi[k] + kBoundsTolerance) return false;
  }
  return true;
}

/// Uniform point generator plus surface area for one primitive's in-bounds
/// patch; generators may rely on rejection, so callers retry.
struct SurfacePatch {
  Real area = 0;
  std::function<Vec3(Rng&)> draw;  // may return out-of-bounds candidates
};

/// Returns the index of the (near-)unit axis of n, or -1 if n is tilted.
int dominant_axis(const Vec3& n) {
  for (int k = 0; k < 3; ++k) {
    if (std::abs(std::abs(n[k]) - 1.0) < 1e-12) return k;
  }
  return -1;
}

SurfacePatch plane_patch(const Primitive& plane, const Vec3& lo, const Vec3& hi, Rng& estimate) {
  SurfacePatch patch;
  const int axis = dominant_axis(plane.normal);
  if (axis >= 0) {
    const Real coord = plane.offset / plane.normal[axis];
    if (coord < lo[axis] - kBoundsTolerance || coord > hi[axis] + kBoundsTolerance) return patch;
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    patch.area = (hi[u] - lo[u]) * (hi[v] - lo[v]);
    patch.draw = [axis, u, v, coord, lo, hi](Rng& rng) {
      Vec3 p;
      p[axis] = coord;
      p[u] = rng.uniform(lo[u], hi[u]);
      p[v] = rng.uniform(lo[v], hi[v]);
      return p;
    };
    return patch;
  }
  // Tilted plane: sample a square patch of the plane around the projected
  // bounds center, estimate the in-bounds fraction by rejection.
  const Vec3 center = 0.5 * (lo + hi);
  const Vec3 on_plane = center - (plane.normal.dot(center) - plane.offset) * plane.normal;
  const Real radius = 0.5 * (hi - lo).norm();
  Vec3 tangent_u = plane.normal.unitOrthogonal();
  Vec3 tangent_v = plane.normal.cross(tangent_u);
  auto draw = [on_plane, tangent_u, tangent_v, radius](Rng& rng) {
    return Vec3(on_plane + rng.uniform(-radius, radius) * tangent_u +
                rng.uniform(-radius, radius) * tangent_v);
  };
  int hits = 0;
  for (int i = 0; i < kAreaTrials; ++i) {
    if (inside_bounds(draw(estimate), lo, hi)) ++hits;
  }
  patch.area = (2 * radius) * (2 * radius) * static_cast<Real>(hits) / kAreaTrials;
  patch.draw = draw;
  return patch;
}

SurfacePatch sphere_patch(const Primitive& sphere, const Vec3& lo, const Vec3& hi, Rng& estimate) {
  SurfacePatch patch;
  auto draw = [center = sphere.center, r = sphere.radius](Rng& rng) {
    return Vec3(center + r * rng.unit_vector());
  };
  int hits = 0;
  for (int i = 0; i < kAreaTrials; ++i) {
    if (inside_bounds(draw(estimate), lo, hi)) ++hits;
  }
  patch.area = 4.0 * kPi * sphere.radius * sphere.radius * static_cast<Real>(hits) / kAreaTrials;
  patch.draw = draw;
  return patch;
}

/// One axis-aligned box face clipped against the bounds (exact rectangle).
void add_box_faces(const Primitive& box, const Vec3& lo, const Vec3& hi,
                   std::vector<SurfacePatch>& patches) {
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const Real coord = side == 0 ? box.box_min[axis] : box.box_max[axis];
      if (coord < lo[axis] - kBoundsTolerance || coord > hi[axis] + kBoundsTolerance) continue;
      const int u = (axis + 1) % 3;
      const int v = (axis + 2) % 3;
      const Real u0 = std::max(box.box_min[u], lo[u]);
      const Real u1 = std::min(box.box_max[u], hi[u]);
      const Real v0 = std::max(box.box_min[v], lo[v]);
      const Real v1 = std::min(box.box_max[v], hi[v]);
      if (u1 <= u0 || v1 <= v0) continue;
      SurfacePatch patch;
      patch.area = (u1 - u0) * (v1 - v0);
      patch.draw = [axis, u, v, coord, u0, u1, v0, v1](Rng& rng) {
        Vec3 p;
        p[axis] = coord;
        p[u] = rng.uniform(u0, u1);
        p[v] = rng.uniform(v0, v1);
        return p;
      };
      patches.push_back(std::move(patch));
    }
  }
}

}  // namespace

void write_ply(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  char buf[128];
  for (const Vec3& p : cloud.points) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw std::runtime_error(path + ": not a PLY file");
  size_t vertex_count = 0;
  bool in_header = true;
  while (in_header && std::getline(in, line)) {
    if (line.rfind("element vertex ", 0) == 0) {
      vertex_count = std::stoul(line.substr(15));
    } else if (line == "end_header") {
      in_header = false;
    } else if (line.rfind("format ", 0) == 0 && line != "format ascii 1.0") {
      throw std::runtime_error(path + ": only ASCII PLY supported");
    }
  }
  if (in_header) throw std::runtime_error(path + ": missing end_header");
  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  for (size_t i = 0; i < vertex_count; ++i) {
    Vec3 p;
    if (!(in >> p.x() >> p.y() >> p.z())) {
      throw std::runtime_error(path + ": truncated vertex list");
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

PointCloud voxel_downsample(const PointCloud& cloud, Real voxel) {
  if (!(voxel > 0)) throw std::runtime_error("voxel_downsample: voxel size must be positive");
  struct Cell {
    Vec3 sum = Vec3::Zero();
    Eigen::Index count = 0;
  };
  std::map<std::array<std::int64_t, 3>, Cell> cells;  // ordered -> deterministic output
  for (const Vec3& p : cloud.points) {
    const std::array<std::int64_t, 3> key = {static_cast<std::int64_t>(std::floor(p.x() / voxel)),
                                             static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                                             static_cast<std::int64_t>(std::floor(p.z() / voxel))};
    Cell& cell = cells[key];
    cell.sum += p;
    cell.count += 1;
  }
  PointCloud out;
  out.points.reserve(cells.size());
  for (const auto& [key, cell] : cells) {
    out.points.push_back(cell.sum / static_cast<Real>(cell.count));
  }
  return out;
}

PointCloud fuse_depth_maps(const std::vector<DepthMap>& depths,
                           const std::vector<Camera>& cameras, Real min_depth, Real max_depth,
                           Real voxel) {
  if (depths.size() != cameras.size()) {
    throw std::runtime_error("fuse_depth_maps: depth map and camera counts differ");
  }
  PointCloud cloud;
  for (size_t view = 0; view < depths.size(); ++view) {
    const DepthMap& map = depths[view];
    const Camera& camera = cameras[view];
    if (map.width != camera.width || map.height != camera.height) {
      throw std::runtime_error("fuse_depth_maps: view " + std::to_string(view) +
                               " dimensions do not match its camera");
    }
    for (int row = 0; row < map.height; ++row) {
      for (int col = 0; col < map.width; ++col) {
        const Real depth = map.depth[static_cast<Eigen::Index>(row) * map.width + col];
        if (!(depth >= min_depth) || depth >= max_depth) continue;
        const Ray ray = camera.ray(row, col);
        cloud.points.push_back(ray.origin + depth * ray.dir);
      }
    }
  }
  return voxel > 0 ? voxel_downsample(cloud, voxel) : cloud;
}

PointCloud clip_to_bounds(const PointCloud& cloud, const Vec3& lo, const Vec3& hi) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) {
    if (inside_bounds(p, lo, hi)) out.points.push_back(p);
  }
  return out;
}

PointCloud sample_scene_surface(const Scene& scene, Eigen::Index count, std::uint64_t seed) {
  if (count <= 0) throw std::runtime_error("sample_scene_surface: count must be positive");
  Rng estimate(mix_seed(seed, 0x61726561));  // "area" stream
  std::vector<SurfacePatch> patches;
  for (const Primitive& primitive : scene.primitives) {
    switch (primitive.kind) {
      case Primitive::Kind::Plane:
        patches.push_back(plane_patch(primitive, scene.bounds_min, scene.bounds_max, estimate));
        break;
      case Primitive::Kind::Sphere:
        patches.push_back(sphere_patch(primitive, scene.bounds_min, scene.bounds_max, estimate));
        break;
      case Primitive::Kind::Box:
        add_box_faces(primitive, scene.bounds_min, scene.bounds_max, patches);
        break;
    }
  }
  Real total_area = 0;
  for (const SurfacePatch& patch : patches) total_area += patch.area;
  if (!(total_area > 0)) {
    throw std::runtime_error("sample_scene_surface: no surface area inside the scene bounds");
  }
  Rng rng(mix_seed(seed, 0x73757266));  // "surf" stream
  PointCloud cloud;
  cloud.points.reserve(count);
  while (static_cast<Eigen::Index>(cloud.points.size()) < count) {
    Real pick = rng.uniform() * total_area;
    size_t index = 0;
    for (; index + 1 < patches.size(); ++index) {
      if (pick < patches[index].area) break;
      pick -= patches[index].area;
    }
    const Vec3 p = patches[index].draw(rng);
    if (inside_bounds(p, scene.bounds_min, scene.bounds_max)) cloud.points.push_back(p);
  }
  return cloud;
}

}  // namespace vfield
