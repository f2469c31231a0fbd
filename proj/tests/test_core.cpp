// Seed mixing, RNG streams, text tokenization, config value parsing, and the
// image / depth raster formats.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "vfield/image.hpp"
#include "vfield/rng.hpp"
#include "vfield/textio.hpp"

using namespace vfield;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("mix_seed derives distinct reproducible streams per tag tuple") {
  CHECK(mix_seed(1, 2, 3) == mix_seed(1, 2, 3));
  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 2, 4));
  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 2));
  CHECK(mix_seed(0) != 0);  // splitmix64 scrambles the zero seed too
}

TEST_CASE("Rng::uniform stays in [0,1) and replays exactly for equal seeds") {
  Rng a(42), b(42), c(43);
  bool same_as_c = true;
  for (int i = 0; i < 1000; ++i) {
    const Real u = a.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == b.uniform());
    same_as_c = same_as_c && (u == c.uniform());
  }
  CHECK_FALSE(same_as_c);
}

TEST_CASE("Rng::uniform(lo, hi) respects the requested interval") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const Real u = rng.uniform(-2.0, 5.0);
    CHECK(u >= -2.0);
    CHECK(u < 5.0);
  }
}

TEST_CASE("Rng::gaussian has roughly standard moments") {
  Rng rng(123);
  const int n = 20000;
  Real sum = 0, sum_sq = 0;
  for (int i = 0; i < n; ++i) {
    const Real g = rng.gaussian();
    sum += g;
    sum_sq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sum_sq / n - 1.0) < 0.05);
}

TEST_CASE("Rng::unit_vector is unit length with near-zero mean direction") {
  Rng rng(5);
  Vec3 mean = Vec3::Zero();
  for (int i = 0; i < 5000; ++i) {
    const Vec3 v = rng.unit_vector();
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
    mean += v;
  }
  CHECK((mean / 5000).norm() < 0.05);
}

TEST_CASE("tokenize_lines strips comments, skips blanks, keeps line numbers") {
  const auto lines = tokenize_lines("a 1 2  # trailing\n\n# whole line\n  b 3\n");
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].number == 1);
  REQUIRE(lines[0].tokens.size() == 3);
  CHECK(lines[0].tokens[0] == "a");
  CHECK(lines[0].tokens[2] == "2");
  CHECK(lines[1].number == 4);
  CHECK(lines[1].tokens[0] == "b");
}

TEST_CASE("LineParser errors carry origin, line number, and keyword") {
  const auto lines = tokenize_lines("plane 0 0 1\n");
  LineParser parser("demo.scene", lines[0]);
  CHECK(parser.keyword() == "plane");
  CHECK(parser.next_vec3("normal") == Vec3(0, 0, 1));
  CHECK_THROWS_WITH_AS(parser.next_real("offset"),
                       doctest::Contains("demo.scene:1"), std::runtime_error);
}

TEST_CASE("LineParser::expect_end rejects extra fields") {
  const auto lines = tokenize_lines("near 0.1 junk\n");
  LineParser parser("s", lines[0]);
  parser.next_real("near");
  CHECK_THROWS_AS(parser.expect_end(), std::runtime_error);
}

TEST_CASE("LineParser::next_real rejects non-numeric fields") {
  const auto lines = tokenize_lines("near abc\n");
  LineParser parser("s", lines[0]);
  CHECK_THROWS_AS(parser.next_real("near"), std::runtime_error);
}

TEST_CASE("parse_key_values keeps duplicates in order and reports bad lines") {
  const auto kvs = parse_key_values("a = 1\n# note\nb = x y\na = 2\n", "cfg");
  REQUIRE(kvs.size() == 3);
  CHECK(kvs[0].key == "a");
  CHECK(kvs[0].value == "1");
  CHECK(kvs[0].line == 1);
  CHECK(kvs[1].value == "x y");
  CHECK(kvs[2].key == "a");
  CHECK(kvs[2].value == "2");
  CHECK_THROWS_WITH_AS(parse_key_values("oops\n", "cfg"),
                       doctest::Contains("cfg:1"), std::runtime_error);
}

TEST_CASE("strict scalar parsers reject trailing garbage and empty values") {
  CHECK(parse_real_value("1.5", "x") == 1.5);
  CHECK(parse_real_value("-2e3", "x") == -2000.0);
  CHECK_THROWS_AS(parse_real_value("1.5x", "x"), std::runtime_error);
  CHECK_THROWS_AS(parse_real_value("", "x"), std::runtime_error);
  CHECK(parse_int_value("42", "x") == 42);
  CHECK_THROWS_AS(parse_int_value("42.5", "x"), std::runtime_error);
  CHECK(parse_bool_value("true", "x"));
  CHECK_FALSE(parse_bool_value("false", "x"));
  CHECK_THROWS_AS(parse_bool_value("yes?", "x"), std::runtime_error);
}

TEST_CASE("write_text_file_atomic round-trips content") {
  const std::string path = temp_path("vfield_textio_roundtrip.txt");
  write_text_file_atomic(path, "hello\nworld\n");
  CHECK(read_text_file(path) == "hello\nworld\n");
  std::remove(path.c_str());
}

TEST_CASE("PPM round-trip is exact for 8-bit-quantized values") {
  Image img = Image::zeros(3, 2);
  for (Eigen::Index i = 0; i < img.pixels(); ++i) {
    img.rgb.col(i) = Vec3(i / 6.0, 1.0 - i / 6.0, 0.5);
  }
  const std::string path = temp_path("vfield_roundtrip.ppm");
  write_ppm(path, img);
  const Image once = read_ppm(path);
  REQUIRE(once.width == 3);
  REQUIRE(once.height == 2);
  // First write quantizes; a second round trip must be lossless.
  write_ppm(path, once);
  const Image twice = read_ppm(path);
  CHECK((once.rgb - twice.rgb).cwiseAbs().maxCoeff() == 0.0);
  CHECK((img.rgb - once.rgb).cwiseAbs().maxCoeff() <= 0.5 / 255.0 + 1e-12);
  std::remove(path.c_str());
}

TEST_CASE("write_ppm clamps out-of-range channels") {
  Image img = Image::zeros(2, 1);
  img.rgb.col(0) = Vec3(-0.5, 2.0, 1.0);
  img.rgb.col(1) = Vec3(0.0, 1.0, 0.999);
  const std::string path = temp_path("vfield_clamp.ppm");
  write_ppm(path, img);
  const Image back = read_ppm(path);
  CHECK(back.rgb(0, 0) == 0.0);
  CHECK(back.rgb(1, 0) == 1.0);
  CHECK(back.rgb(2, 0) == 1.0);
  std::remove(path.c_str());
}

TEST_CASE("depth raster round-trips float32 values bit-exactly") {
  DepthMap depth = DepthMap::zeros(4, 3);
  for (Eigen::Index i = 0; i < depth.depth.size(); ++i) {
    depth.depth[i] = static_cast<Real>(static_cast<float>(0.1 * i + 0.007));
  }
  const std::string path = temp_path("vfield_roundtrip.depth");
  write_depth(path, depth);
  const DepthMap back = read_depth(path);
  REQUIRE(back.width == 4);
  REQUIRE(back.height == 3);
  for (Eigen::Index i = 0; i < depth.depth.size(); ++i) {
    CHECK(static_cast<float>(back.depth[i]) == static_cast<float>(depth.depth[i]));
  }
  std::remove(path.c_str());
}

TEST_CASE("read_depth rejects a wrong magic header") {
  const std::string path = temp_path("vfield_badmagic.depth");
  write_text_file_atomic(path, "NOTDEPTHxxxxxxxxxxxxxxxx");
  CHECK_THROWS_AS(read_depth(path), std::runtime_error);
  std::remove(path.c_str());
}
