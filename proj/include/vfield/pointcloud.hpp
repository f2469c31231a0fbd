#pragma once

#include <string>
#include <vector>

#include "vfield/camera.hpp"
#include "vfield/geometry.hpp"
#include "vfield/image.hpp"
#include "vfield/types.hpp"

namespace vfield {

struct PointCloud {
  std::vector<Vec3> points;
};

/// ASCII PLY, vertex-only (x y z float properties).
void write_ply(const std::string& path, const PointCloud& cloud);
PointCloud read_ply(const std::string& path);

/// One centroid per occupied voxel (cell edge `voxel` meters). Output is
/// ordered by voxel key, so it is deterministic, and idempotent: a centroid
/// stays inside its voxel, so a second pass returns the same cloud.
PointCloud voxel_downsample(const PointCloud& cloud, Real voxel);

/// Back-projects every pixel with depth in [min_depth, max_depth) along its
/// camera ray; pixels at or beyond max_depth are treated as miss sentinels
/// and skipped. voxel > 0 downsamples the fused result.
PointCloud fuse_depth_maps(const std::vector<DepthMap>& depths,
                           const std::vector<Camera>& cameras, Real min_depth, Real max_depth,
                           Real voxel);

/// Keeps points inside the axis-aligned box, with a 1e-9 tolerance so
/// boundary points survive.
PointCloud clip_to_bounds(const PointCloud& cloud, const Vec3& lo, const Vec3& hi);

/// Uniform area-weighted sampling of the primitive surfaces inside the scene
/// bounds. Axis-aligned plane and box patches are sampled exactly; spheres
/// and tilted planes use rejection sampling with a Monte-Carlo area estimate
/// (fixed trial count), all deterministic for a fixed seed.
PointCloud sample_scene_surface(const Scene& scene, Eigen::Index count, std::uint64_t seed);

}  // namespace vfield
