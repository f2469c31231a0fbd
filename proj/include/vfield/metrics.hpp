#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "vfield/image.hpp"
#include "vfield/pointcloud.hpp"
#include "vfield/types.hpp"

namespace vfield {

// Peak signal-to-noise ratio between two images whose channels live in [0, 1].
// The per-pixel error is the squared RGB L2 distance (summed over the three
// channels, not averaged), and the MSE is its mean over pixels:
//
//   psnr = -10 * log10( mean_pixels |a - b|^2 )
//
// Identical images return +infinity. Throws if the dimensions differ.
Real psnr(const Image& a, const Image& b);

// Exact nearest-neighbour index over a fixed point cloud, backed by a uniform
// grid. Queries return the same index as a brute-force linear scan, including
// tie handling: among points at the minimal distance, the lowest index wins.
// Squared distances are computed with the same expression as the brute-force
// path, so results match bit for bit.
class GridIndex {
 public:
  // Builds the grid. The cloud must stay alive for the index lifetime and
  // must be non-empty.
  explicit GridIndex(const PointCloud& cloud);

  // Index of the nearest point to q. If d2_out is non-null it receives the
  // squared distance.
  int nearest(const Vec3& q, Real* d2_out = nullptr) const;

 private:
  std::array<int, 3> cell_of(const Vec3& p, bool clamp_top) const;
  void scan_cell(const std::array<int, 3>& c, const Vec3& q, Real& best_d2,
                 int& best_idx) const;

  const PointCloud* cloud_;
  Vec3 lo_;
  std::array<Real, 3> cell_size_{};  // 0 on axes with a single cell
  std::array<int, 3> grid_dims_{};
  std::unordered_map<std::int64_t, std::vector<int>> cells_;
};

// Reference nearest neighbour: ascending linear scan keeping the first
// strictly smaller squared distance. GridIndex::nearest must agree exactly.
int nearest_brute(const PointCloud& cloud, const Vec3& q, Real* d2_out = nullptr);

// Symmetric chamfer statistics between two clouds, in millimetres. The
// distance multiset is the union of both directions: for every point of a the
// distance to its nearest neighbour in b, and vice versa. `mean_mm` and
// `median_mm` summarise that multiset; the median of an even-sized multiset is
// the average of the two middle elements after sorting. Throws if either
// cloud is empty.
struct ChamferResult {
  Real mean_mm = 0;
  Real median_mm = 0;
};

ChamferResult chamfer_distance(const PointCloud& a, const PointCloud& b);

// Precision / recall / F1 at a distance threshold in scene units (metres).
// A predicted point is a true positive when its nearest ground-truth point is
// strictly closer than the threshold; recall mirrors this from the
// ground-truth side. F1 is the harmonic mean, defined as 0 when
// precision + recall == 0. Throws if either cloud is empty.
struct PrfResult {
  Real precision = 0;
  Real recall = 0;
  Real f1 = 0;
};

PrfResult precision_recall_f1(const PointCloud& predicted,
                              const PointCloud& truth, Real threshold);

// Bundle produced by the evaluation command.
struct MetricReport {
  Real psnr_db = 0;  // PSNR pooled over evaluated views; +inf if all identical
  ChamferResult chamfer;
  PrfResult prf;
  Real threshold = 0;  // metres, as used for prf
};

// Human-readable multi-line summary.
std::string format_metric_report(const MetricReport& report);

// Single-row CSV form of the same numbers.
std::string metric_report_csv_header();
std::string metric_report_csv_row(const MetricReport& report);

}  // namespace vfield
