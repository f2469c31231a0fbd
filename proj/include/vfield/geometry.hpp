#pragma once

#include "vfield/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vfield {

/// Surface albedo: constant color or a 3D checkerboard over world coordinates.
struct Albedo {
  enum class Kind { Constant, Checker };
  Kind kind = Kind::Constant;
  Vec3 color_a = Vec3(0.8, 0.8, 0.8);
  Vec3 color_b = Vec3(0.2, 0.2, 0.2);  // checker only
  Real cell = 1.0;                     // checker cell size [m]

  Vec3 eval(const Vec3& p) const;
};

/// Analytic scene primitive. Planes are infinite; offset is measured along the
/// normal, i.e. the plane is { p : normal . p == offset }.
struct Primitive {
  enum class Kind { Plane, Sphere, Box };
  Kind kind = Kind::Plane;

  Vec3 normal = Vec3(0, 0, 1);  // plane
  Real offset = 0.0;            // plane

  Vec3 center = Vec3::Zero();  // sphere
  Real radius = 1.0;           // sphere

  Vec3 box_min = Vec3::Zero();  // box
  Vec3 box_max = Vec3::Ones();  // box

  Albedo albedo;

  static Primitive plane(const Vec3& n, Real offset, Albedo a = {});
  static Primitive sphere(const Vec3& c, Real r, Albedo a = {});
  static Primitive box(const Vec3& lo, const Vec3& hi, Albedo a = {});

  /// Closest point on this primitive's surface and the outward normal there.
  void closest_point(const Vec3& x, Vec3& on_surface, Vec3& outward) const;

  /// Smallest intersection distance in [t_min, t_max] along origin + t*dir,
  /// or nullopt. dir must be unit length.
  std::optional<Real> raycast(const Vec3& origin, const Vec3& dir, Real t_min, Real t_max) const;
};

struct Scene {
  std::vector<Primitive> primitives;
  Vec3 c_scene = Vec3::Zero();
  Vec3 bounds_min = Vec3(-1, -1, -1);
  Vec3 bounds_max = Vec3(1, 1, 1);
  Real near = 0.05;
  Real far = 10.0;
  Vec3 background = Vec3::Zero();

  Real bounds_circumradius() const {
    return 0.5 * (bounds_max - bounds_min).norm();
  }

  /// Geometric invariant violations, in human-readable form. Empty when valid.
  /// Kept out of the constructors so self-check tooling can report them.
  std::vector<std::string> validate() const;
};

struct SurfaceQuery {
  Vec3 point;       // nearest surface point x_S
  Real distance;    // ||x - x_S||
  int primitive;    // owning primitive index (lowest index on ties)
  Vec3 outward;     // outward normal of the owning primitive at x_S
};

/// Nearest surface point over all primitives; ties go to the lowest index.
SurfaceQuery nearest_surface_point(const Scene& scene, const Vec3& x);

struct FieldSample {
  Vec3 v;           // unit vector toward the nearest surface
  bool on_surface;  // true when x lies on a surface within 1e-9
};

/// Unit vector pointing from x to its nearest surface point. On-surface
/// queries return the negated outward normal of the owning primitive and set
/// the flag, since the approach side is not known statelessly.
FieldSample oracle_vf(const Scene& scene, const Vec3& x);

/// Oracle field for a batch of positions (columns). On-surface columns follow
/// the same convention as oracle_vf.
Mat3X oracle_vf_batch(const Scene& scene, const Mat3X& positions);

struct RaycastHit {
  Real t = 0.0;       // distance along the ray; scene.far on a miss
  bool hit = false;
  Vec3 rgb = Vec3::Zero();
  int primitive = -1;
};

/// First intersection in [scene.near, scene.far]; misses return the
/// background color and t = scene.far (the depth sentinel).
RaycastHit raycast(const Scene& scene, const Vec3& origin, const Vec3& dir);

/// Albedo of the surface nearest to x; the color oracle for volume samples.
Vec3 oracle_color(const Scene& scene, const Vec3& x);

}  // namespace vfield
