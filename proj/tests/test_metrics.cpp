// Evaluation metrics: PSNR, chamfer statistics, precision/recall/F1, and the
// exactness of the grid-backed nearest-neighbour index against brute force.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "vfield/metrics.hpp"
#include "vfield/rng.hpp"

using namespace vfield;

namespace {

PointCloud random_cloud(Rng& rng, int n, const Vec3& lo, const Vec3& hi) {
  PointCloud cloud;
  cloud.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    cloud.points.push_back(Vec3(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()),
                                rng.uniform(lo.z(), hi.z())));
  }
  return cloud;
}

void check_exact_match(const PointCloud& cloud, const std::vector<Vec3>& queries) {
  const GridIndex grid(cloud);
  for (const Vec3& q : queries) {
    Real grid_d2 = 0, brute_d2 = 0;
    const int gi = grid.nearest(q, &grid_d2);
    const int bi = nearest_brute(cloud, q, &brute_d2);
    CHECK(gi == bi);
    CHECK(grid_d2 == brute_d2);  // same arithmetic, so bitwise equal
  }
}

}  // namespace

TEST_CASE("psnr of identical images is infinite; frozen value for known MSE") {
  Image a = Image::zeros(4, 4);
  a.rgb.setConstant(0.25);
  CHECK(std::isinf(psnr(a, a)));

  // Per-pixel squared RGB error of 0.25 -> psnr = -10*log10(0.25) ~ 6.0206 dB.
  Image b = a;
  b.rgb.row(0).array() += 0.5;
  CHECK(psnr(a, b) == doctest::Approx(6.020599913279624).epsilon(1e-12));
}

TEST_CASE("psnr decreases monotonically with growing noise") {
  Rng rng(61);
  Image clean = Image::zeros(8, 8);
  for (Eigen::Index i = 0; i < clean.pixels(); ++i) {
    clean.rgb.col(i) = Vec3(rng.uniform(), rng.uniform(), rng.uniform());
  }
  Real prev = infinity();
  for (Real level : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    Image noisy = clean;
    Rng noise(62);
    for (Eigen::Index i = 0; i < noisy.rgb.size(); ++i) {
      noisy.rgb(i) += level * noise.uniform(-1.0, 1.0);
    }
    const Real value = psnr(clean, noisy);
    CHECK(value < prev);
    prev = value;
  }
}

TEST_CASE("psnr rejects mismatched dimensions and empty images") {
  CHECK_THROWS_AS(psnr(Image::zeros(2, 2), Image::zeros(2, 3)), std::runtime_error);
  CHECK_THROWS_AS(psnr(Image{}, Image{}), std::runtime_error);
}

TEST_CASE("grid nearest neighbour equals brute force on uniform clouds") {
  Rng rng(63);
  const PointCloud cloud = random_cloud(rng, 1000, Vec3(-2, -2, -2), Vec3(2, 2, 2));
  std::vector<Vec3> queries;
  for (int i = 0; i < 300; ++i) {
    queries.push_back(Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)));
  }
  // Far-outside queries stress the ring expansion bound.
  queries.push_back(Vec3(50, 0, 0));
  queries.push_back(Vec3(-40, 40, -40));
  check_exact_match(cloud, queries);
}

TEST_CASE("grid nearest neighbour equals brute force on degenerate clouds") {
  Rng rng(64);

  SUBCASE("planar cloud (zero extent on one axis)") {
    PointCloud cloud = random_cloud(rng, 800, Vec3(-1, -1, 0), Vec3(1, 1, 0));
    std::vector<Vec3> queries;
    for (int i = 0; i < 200; ++i) {
      queries.push_back(Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)));
    }
    check_exact_match(cloud, queries);
  }
  SUBCASE("collinear cloud") {
    PointCloud cloud;
    for (int i = 0; i < 500; ++i) cloud.points.push_back(Vec3(0.01 * i, 0, 0));
    check_exact_match(cloud, {Vec3(1, 2, 0), Vec3(-5, 0, 0), Vec3(2.503, 0.1, -0.1)});
  }
  SUBCASE("single point") {
    PointCloud cloud;
    cloud.points.push_back(Vec3(1, 2, 3));
    check_exact_match(cloud, {Vec3(0, 0, 0), Vec3(1, 2, 3)});
  }
  SUBCASE("duplicated points tie to the lowest index") {
    PointCloud cloud;
    cloud.points.push_back(Vec3(0.5, 0.5, 0.5));
    cloud.points.push_back(Vec3(1.5, 0.5, 0.5));
    cloud.points.push_back(Vec3(0.5, 0.5, 0.5));  // duplicate of index 0
    const GridIndex grid(cloud);
    CHECK(grid.nearest(Vec3(0.4, 0.5, 0.5)) == 0);
    CHECK(nearest_brute(cloud, Vec3(0.4, 0.5, 0.5)) == 0);
    // Query equidistant from index 0/2 and index 1.
    CHECK(grid.nearest(Vec3(1.0, 0.5, 0.5)) == nearest_brute(cloud, Vec3(1.0, 0.5, 0.5)));
  }
  SUBCASE("clustered cloud with a far outlier") {
    PointCloud cloud = random_cloud(rng, 600, Vec3(0, 0, 0), Vec3(0.1, 0.1, 0.1));
    cloud.points.push_back(Vec3(10, 10, 10));
    std::vector<Vec3> queries = {Vec3(9, 9, 9), Vec3(5, 5, 5), Vec3(0.05, 0.05, 0.05)};
    check_exact_match(cloud, queries);
  }
}

TEST_CASE("GridIndex rejects an empty cloud") {
  PointCloud empty;
  CHECK_THROWS_AS(GridIndex{empty}, std::runtime_error);
}

TEST_CASE("chamfer distance of identical clouds is zero") {
  Rng rng(65);
  const PointCloud cloud = random_cloud(rng, 200, Vec3(-1, -1, -1), Vec3(1, 1, 1));
  const ChamferResult r = chamfer_distance(cloud, cloud);
  CHECK(r.mean_mm == 0.0);
  CHECK(r.median_mm == 0.0);
}

TEST_CASE("chamfer distance matches a hand-computed asymmetric case") {
  PointCloud a, b;
  a.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  b.points = {Vec3(0, 0, 0)};
  // Distances: a->b gives {0, 1000mm}, b->a gives {0}. Union sorted:
  // {0, 0, 1000}; mean 1000/3, median 0.
  const ChamferResult r = chamfer_distance(a, b);
  CHECK(r.mean_mm == doctest::Approx(1000.0 / 3.0).epsilon(1e-12));
  CHECK(r.median_mm == 0.0);
}

TEST_CASE("chamfer median averages the two middle values for even counts") {
  PointCloud a, b;
  a.points = {Vec3(0, 0, 0)};
  b.points = {Vec3(0.1, 0, 0)};
  // Both directions give 100mm; the even-count median is their average.
  const ChamferResult r = chamfer_distance(a, b);
  CHECK(r.mean_mm == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(r.median_mm == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("chamfer grows monotonically with added noise") {
  Rng rng(66);
  const PointCloud clean = random_cloud(rng, 400, Vec3(-1, -1, -1), Vec3(1, 1, 1));
  Real prev = 0;
  for (Real level : {0.005, 0.01, 0.03, 0.08}) {
    PointCloud noisy = clean;
    Rng noise(67);
    for (Vec3& p : noisy.points) p += level * noise.unit_vector();
    const ChamferResult r = chamfer_distance(clean, noisy);
    CHECK(r.mean_mm > prev);
    prev = r.mean_mm;
  }
}

TEST_CASE("precision_recall_f1 matches hand-built overlap cases") {
  PointCloud pred, truth;
  truth.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
  pred.points = {Vec3(0.01, 0, 0), Vec3(1.01, 0, 0), Vec3(9, 0, 0)};
  const PrfResult r = precision_recall_f1(pred, truth, 0.05);
  CHECK(r.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.f1 == doctest::Approx(2 * (2.0 / 3.0) * 0.5 / (2.0 / 3.0 + 0.5)).epsilon(1e-12));
}

TEST_CASE("precision_recall_f1 threshold comparison is strict") {
  PointCloud pred, truth;
  truth.points = {Vec3(0, 0, 0)};
  pred.points = {Vec3(0.05, 0, 0)};  // exactly at the threshold
  const PrfResult r = precision_recall_f1(pred, truth, 0.05);
  CHECK(r.precision == 0.0);
  CHECK(r.recall == 0.0);
  CHECK(r.f1 == 0.0);  // p + r == 0 defines f1 = 0
  const PrfResult inside = precision_recall_f1(pred, truth, 0.05 + 1e-9);
  CHECK(inside.precision == 1.0);
  CHECK(inside.f1 == 1.0);
}

TEST_CASE("perfect reconstruction scores f1 = 1") {
  Rng rng(68);
  const PointCloud cloud = random_cloud(rng, 300, Vec3(-1, -1, -1), Vec3(1, 1, 1));
  const PrfResult r = precision_recall_f1(cloud, cloud, 0.05);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);
}

TEST_CASE("f1 degrades monotonically as prediction noise grows") {
  Rng rng(69);
  const PointCloud truth = random_cloud(rng, 500, Vec3(-1, -1, -1), Vec3(1, 1, 1));
  Real prev = 1.1;
  // The same per-point displacement pattern is rescaled for every level, so
  // the set of points still within the threshold shrinks strictly.
  for (Real level : {0.04, 0.08, 0.16, 0.32}) {
    PointCloud pred = truth;
    Rng noise(70);
    for (Vec3& p : pred.points) p += level * noise.uniform() * noise.unit_vector();
    const PrfResult r = precision_recall_f1(pred, truth, 0.05);
    CHECK(r.f1 < prev);
    prev = r.f1;
  }
}

TEST_CASE("precision_recall_f1 agrees exactly with a brute-force evaluation") {
  Rng rng(71);
  const PointCloud pred = random_cloud(rng, 700, Vec3(-1, -1, -1), Vec3(1, 1, 1));
  PointCloud truth = random_cloud(rng, 600, Vec3(-1, -1, -1), Vec3(1, 1, 1));
  // Inject near-duplicates so some distances sit very close to the threshold.
  for (int i = 0; i < 100; ++i) {
    truth.points.push_back(pred.points[static_cast<size_t>(i) * 3] + Vec3(0.05, 0, 0));
  }
  const Real threshold = 0.05;
  const PrfResult fast = precision_recall_f1(pred, truth, threshold);

  auto directed = [&](const PointCloud& from, const PointCloud& to) {
    std::size_t hits = 0;
    for (const Vec3& p : from.points) {
      Real d2 = 0;
      nearest_brute(to, p, &d2);
      if (std::sqrt(d2) < threshold) ++hits;
    }
    return static_cast<Real>(hits) / static_cast<Real>(from.points.size());
  };
  CHECK(fast.precision == directed(pred, truth));
  CHECK(fast.recall == directed(truth, pred));
}

TEST_CASE("metric report formatting includes every field") {
  MetricReport report;
  report.psnr_db = 24.5;
  report.chamfer.mean_mm = 3.25;
  report.chamfer.median_mm = 2.5;
  report.prf = {0.91, 0.87, 0.889887640449438};
  report.threshold = 0.05;
  const std::string text = format_metric_report(report);
  CHECK(text.find("psnr_db") != std::string::npos);
  CHECK(text.find("24.5") != std::string::npos);
  CHECK(text.find("3.25") != std::string::npos);
  CHECK(text.find("0.91") != std::string::npos);
  const std::string header = metric_report_csv_header();
  const std::string row = metric_report_csv_row(report);
  CHECK(std::count(header.begin(), header.end(), ',') ==
        std::count(row.begin(), row.end(), ','));
  CHECK(row.find("24.5") == 0);
}
