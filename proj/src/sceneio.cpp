#include "vfield/sceneio.hpp"

#include <cmath>
#include <stdexcept>

#include "vfield/camera.hpp"
#include "vfield/textio.hpp"

namespace vfield {
namespace {

Albedo parse_albedo(LineParser& parser) {
  const std::string kind = parser.next_token("albedo kind (color|checker)");
  Albedo albedo;
  if (kind == "color") {
    albedo.kind = Albedo::Kind::Constant;
    albedo.color_a = parser.next_vec3("color");
  } else if (kind == "checker") {
    albedo.kind = Albedo::Kind::Checker;
    albedo.color_a = parser.next_vec3("first checker color");
    albedo.color_b = parser.next_vec3("second checker color");
    albedo.cell = parser.next_real("checker cell size");
    if (albedo.cell <= 0) parser.fail("checker cell size must be positive");
  } else {
    parser.fail("unknown albedo kind '" + kind + "' (expected color or checker)");
  }
  return albedo;
}

}  // namespace

Scene parse_scene(const std::string& text, const std::string& origin) {
  Scene scene;
  bool have_bounds = false, have_near = false, have_far = false;
  for (const TextLine& line : tokenize_lines(text)) {
    LineParser parser(origin, line);
    const std::string& key = parser.keyword();
    if (key == "bounds") {
      scene.bounds_min = parser.next_vec3("bounds min");
      scene.bounds_max = parser.next_vec3("bounds max");
      have_bounds = true;
    } else if (key == "near") {
      scene.near = parser.next_real("near distance");
      have_near = true;
    } else if (key == "far") {
      scene.far = parser.next_real("far distance");
      have_far = true;
    } else if (key == "background") {
      scene.background = parser.next_vec3("background color");
    } else if (key == "plane") {
      const Vec3 normal = parser.next_vec3("plane normal");
      const Real offset = parser.next_real("plane offset");
      scene.primitives.push_back(Primitive::plane(normal, offset, parse_albedo(parser)));
    } else if (key == "sphere") {
      const Vec3 center = parser.next_vec3("sphere center");
      const Real radius = parser.next_real("sphere radius");
      scene.primitives.push_back(Primitive::sphere(center, radius, parse_albedo(parser)));
    } else if (key == "box") {
      const Vec3 lo = parser.next_vec3("box min corner");
      const Vec3 hi = parser.next_vec3("box max corner");
      scene.primitives.push_back(Primitive::box(lo, hi, parse_albedo(parser)));
    } else {
      parser.fail("unknown scene keyword");
    }
    parser.expect_end();
  }
  if (!have_bounds) throw std::runtime_error(origin + ": missing required 'bounds' line");
  if (!have_near) throw std::runtime_error(origin + ": missing required 'near' line");
  if (!have_far) throw std::runtime_error(origin + ": missing required 'far' line");
  if (scene.primitives.empty()) throw std::runtime_error(origin + ": scene has no primitives");
  scene.c_scene = 0.5 * (scene.bounds_min + scene.bounds_max);
  const std::vector<std::string> problems = scene.validate();
  if (!problems.empty()) {
    std::string message = origin + ": invalid scene:";
    for (const std::string& p : problems) message += "\n  " + p;
    throw std::runtime_error(message);
  }
  return scene;
}

Scene load_scene(const std::string& path) {
  return parse_scene(read_text_file(path), path);
}

std::vector<Camera> parse_cameras(const std::string& text, const std::string& origin) {
  std::vector<Camera> cameras;
  int width = 0, height = 0;
  Real fx = 0, fy = 0;
  bool have_size = false, have_hfov = false;
  auto require_header = [&](const LineParser& parser) {
    if (!have_size || !have_hfov) {
      throw std::runtime_error(origin + ":" + std::to_string(parser.line_number()) +
                               ": 'size' and 'hfov' must come before any view");
    }
  };
  for (const TextLine& line : tokenize_lines(text)) {
    LineParser parser(origin, line);
    const std::string& key = parser.keyword();
    if (key == "size") {
      width = parser.next_int("image width");
      height = parser.next_int("image height");
      if (width <= 0 || height <= 0) parser.fail("image size must be positive");
      have_size = true;
    } else if (key == "hfov") {
      const Real hfov = parser.next_real("horizontal field of view (degrees)");
      if (hfov <= 0 || hfov >= 180) parser.fail("hfov must be in (0, 180) degrees");
      if (!have_size) parser.fail("'size' must come before 'hfov'");
      fx = Camera::focal_from_hfov(hfov, width);
      fy = fx;  // square pixels
      have_hfov = true;
    } else if (key == "view") {
      require_header(parser);
      const Vec3 position = parser.next_vec3("camera position");
      const Vec3 target = parser.next_vec3("look-at target");
      Vec3 up(0, 0, 1);
      if (!parser.at_end()) up = parser.next_vec3("up vector");
      cameras.push_back(Camera::look_at(position, target, up, fx, fy, width, height));
    } else if (key == "ring") {
      require_header(parser);
      const int count = parser.next_int("view count");
      if (count <= 0) parser.fail("view count must be positive");
      const Real cx = parser.next_real("ring center x");
      const Real cy = parser.next_real("ring center y");
      const Real z = parser.next_real("ring height");
      const Real radius = parser.next_real("ring radius");
      const Vec3 target = parser.next_vec3("look-at target");
      for (int k = 0; k < count; ++k) {
        const Real angle = 2.0 * kPi * k / count;
        const Vec3 position(cx + radius * std::cos(angle), cy + radius * std::sin(angle), z);
        cameras.push_back(Camera::look_at(position, target, Vec3(0, 0, 1), fx, fy, width, height));
      }
    } else {
      parser.fail("unknown camera keyword");
    }
    parser.expect_end();
  }
  if (cameras.empty()) throw std::runtime_error(origin + ": no views defined");
  return cameras;
}

std::vector<Camera> load_cameras(const std::string& path) {
  return parse_cameras(read_text_file(path), path);
}

}  // namespace vfield
