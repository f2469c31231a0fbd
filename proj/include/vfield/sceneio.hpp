#pragma once

#include <string>
#include <vector>

#include "vfield/camera.hpp"
#include "vfield/geometry.hpp"

namespace vfield {

/// Scene description schema — one keyword per line, '#' comments, whitespace
/// separated fields. All lengths in meters.
///
///   bounds     minx miny minz  maxx maxy maxz
///   near       t
///   far        t
///   background r g b                               # optional, default black
///   plane      nx ny nz  offset      <albedo>     # {x : n·x == offset}
///   sphere     cx cy cz  radius      <albedo>
///   box        minx miny minz  maxx maxy maxz  <albedo>
///
///   <albedo> := color   r g b
///             | checker r1 g1 b1  r2 g2 b2  cell
///
/// `bounds`, `near`, and `far` are required; primitives keep file order
/// (ties in nearest-point and raycast queries resolve to the lowest index).
Scene parse_scene(const std::string& text, const std::string& origin);
Scene load_scene(const std::string& path);

/// Camera specification schema — same lexical rules as the scene schema.
///
///   size  width height                            # pixels, required first
///   hfov  degrees                                 # horizontal FOV, required
///   view  px py pz  tx ty tz  [ux uy uz]          # look-at pose, up default (0,0,1)
///   ring  count  cx cy  height  radius  tx ty tz  # count cameras evenly spaced
///                                                 # on the circle, all aimed at t
///
/// Views keep file order; a `ring` expands in angle order starting at +x.
std::vector<Camera> parse_cameras(const std::string& text, const std::string& origin);
std::vector<Camera> load_cameras(const std::string& path);

}  // namespace vfield
