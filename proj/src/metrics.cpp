#include "vfield/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace vfield {
namespace {

constexpr int kMaxCellsPerAxis = 1024;

std::int64_t cell_key(const std::array<int, 3>& c,
                      const std::array<int, 3>& dims) {
  return (static_cast<std::int64_t>(c[0]) * dims[1] + c[1]) * dims[2] + c[2];
}

std::string format_real(Real v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

Real psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::runtime_error("psnr: image dimensions differ (" +
                             std::to_string(a.width) + "x" +
                             std::to_string(a.height) + " vs " +
                             std::to_string(b.width) + "x" +
                             std::to_string(b.height) + ")");
  }
  const auto pixels = a.rgb.cols();
  if (pixels == 0) throw std::runtime_error("psnr: empty image");
  const Real mse = (a.rgb - b.rgb).squaredNorm() / static_cast<Real>(pixels);
  if (mse == 0) return infinity();
  return -10.0 * std::log10(mse);
}

GridIndex::GridIndex(const PointCloud& cloud) : cloud_(&cloud) {
  const auto& pts = cloud.points;
  if (pts.empty()) throw std::runtime_error("GridIndex: empty point cloud");

  lo_ = pts[0];
  Vec3 hi = pts[0];
  for (const Vec3& p : pts) {
    lo_ = lo_.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 extent = hi - lo_;

  // Aim for roughly one point per cell: cells of edge cbrt(volume / n),
  // using a floored extent only to pick the target edge for degenerate axes.
  const Real n = static_cast<Real>(pts.size());
  const Vec3 padded = extent.cwiseMax(1e-6);
  const Real target = std::cbrt(padded.prod() / n);

  for (int k = 0; k < 3; ++k) {
    if (extent[k] <= 0) {
      grid_dims_[k] = 1;
      cell_size_[k] = 0;
      continue;
    }
    const int dims = static_cast<int>(std::ceil(extent[k] / target));
    grid_dims_[k] = std::clamp(dims, 1, kMaxCellsPerAxis);
    cell_size_[k] = extent[k] / static_cast<Real>(grid_dims_[k]);
  }

  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    cells_[cell_key(cell_of(pts[static_cast<std::size_t>(i)], true),
                    grid_dims_)]
        .push_back(i);
  }
}

std::array<int, 3> GridIndex::cell_of(const Vec3& p, bool clamp_top) const {
  std::array<int, 3> c{};
  for (int k = 0; k < 3; ++k) {
    if (cell_size_[k] == 0) {
      c[k] = 0;  // single-cell axis: everything collapses to cell 0
      continue;
    }
    const Real f = std::floor((p[k] - lo_[k]) / cell_size_[k]);
    int idx = static_cast<int>(std::clamp<Real>(f, -1e9, 1e9));
    // Stored points sit inside the grid; the top edge lands on grid_dims_
    // by floor and belongs to the last cell.
    if (clamp_top) idx = std::clamp(idx, 0, grid_dims_[k] - 1);
    c[k] = idx;
  }
  return c;
}

void GridIndex::scan_cell(const std::array<int, 3>& c, const Vec3& q,
                          Real& best_d2, int& best_idx) const {
  for (int k = 0; k < 3; ++k) {
    if (c[k] < 0 || c[k] >= grid_dims_[k]) return;
  }
  const auto it = cells_.find(cell_key(c, grid_dims_));
  if (it == cells_.end()) return;
  for (int idx : it->second) {
    const Real d2 =
        (cloud_->points[static_cast<std::size_t>(idx)] - q).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
      best_d2 = d2;
      best_idx = idx;
    }
  }
}

int GridIndex::nearest(const Vec3& q, Real* d2_out) const {
  // Start from the clamped cell: for queries outside the bounds the search
  // then begins at the nearest grid corner instead of far outside it.
  const std::array<int, 3> qc = cell_of(q, true);

  // Per-axis distance from the query to the grid's span. Every stored point
  // is at least this far away along that axis, which lets the ring bound
  // below absorb the fixed offset of an out-of-bounds query.
  Vec3 base = Vec3::Zero();
  for (int k = 0; k < 3; ++k) {
    const Real span = cell_size_[k] * static_cast<Real>(grid_dims_[k]);
    if (q[k] < lo_[k]) {
      base[k] = lo_[k] - q[k];
    } else if (q[k] > lo_[k] + span) {
      base[k] = q[k] - (lo_[k] + span);
    }
  }
  const Real base2 = base.squaredNorm();

  // Rings beyond r_cover cannot contain any in-range cell.
  int r_cover = 0;
  for (int k = 0; k < 3; ++k) {
    r_cover = std::max(r_cover, std::max(qc[k], grid_dims_[k] - 1 - qc[k]));
  }

  Real best_d2 = infinity();
  int best_idx = -1;
  for (int r = 0; r <= r_cover; ++r) {
    if (r >= 1) {
      // A populated cell at Chebyshev ring >= r has some axis k with cell
      // offset >= r, which keeps its points at least gap_k away along k and
      // base[j] away along every other axis. The axis achieving the ring is
      // unknown, so the valid lower bound takes the min over the candidates;
      // axes too short to reach ring r cannot be the achiever.
      Real lower2 = infinity();
      for (int k = 0; k < 3; ++k) {
        if (grid_dims_[k] - 1 < r) continue;
        const Real gap = base[k] > 0
                             ? base[k] + static_cast<Real>(r) * cell_size_[k]
                             : static_cast<Real>(r - 1) * cell_size_[k];
        lower2 = std::min(lower2, gap * gap + base2 - base[k] * base[k]);
      }
      // No axis reaches this ring: every stored point was already scanned.
      if (lower2 == infinity()) break;
      if (lower2 > best_d2) break;
    }
    if (r == 0) {
      scan_cell(qc, q, best_d2, best_idx);
      continue;
    }
    // Enumerate the shell of cells at Chebyshev distance exactly r.
    for (int dx = -r; dx <= r; ++dx) {
      for (int dy = -r; dy <= r; ++dy) {
        const bool face_xy = std::abs(dx) == r || std::abs(dy) == r;
        if (face_xy) {
          for (int dz = -r; dz <= r; ++dz) {
            scan_cell({qc[0] + dx, qc[1] + dy, qc[2] + dz}, q, best_d2,
                      best_idx);
          }
        } else {
          scan_cell({qc[0] + dx, qc[1] + dy, qc[2] - r}, q, best_d2, best_idx);
          scan_cell({qc[0] + dx, qc[1] + dy, qc[2] + r}, q, best_d2, best_idx);
        }
      }
    }
  }

  if (best_idx < 0) {
    throw std::logic_error("GridIndex: search exhausted without a result");
  }
  if (d2_out != nullptr) *d2_out = best_d2;
  return best_idx;
}

int nearest_brute(const PointCloud& cloud, const Vec3& q, Real* d2_out) {
  if (cloud.points.empty()) {
    throw std::runtime_error("nearest_brute: empty point cloud");
  }
  Real best_d2 = infinity();
  int best_idx = -1;
  for (int i = 0; i < static_cast<int>(cloud.points.size()); ++i) {
    const Real d2 =
        (cloud.points[static_cast<std::size_t>(i)] - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best_idx = i;
    }
  }
  if (d2_out != nullptr) *d2_out = best_d2;
  return best_idx;
}

ChamferResult chamfer_distance(const PointCloud& a, const PointCloud& b) {
  if (a.points.empty() || b.points.empty()) {
    throw std::runtime_error("chamfer_distance: empty point cloud");
  }
  const GridIndex index_a(a);
  const GridIndex index_b(b);

  std::vector<Real> distances_mm;
  distances_mm.reserve(a.points.size() + b.points.size());
  for (const Vec3& p : a.points) {
    Real d2 = 0;
    index_b.nearest(p, &d2);
    distances_mm.push_back(std::sqrt(d2) * 1000.0);
  }
  for (const Vec3& p : b.points) {
    Real d2 = 0;
    index_a.nearest(p, &d2);
    distances_mm.push_back(std::sqrt(d2) * 1000.0);
  }

  ChamferResult result;
  Real sum = 0;
  for (Real d : distances_mm) sum += d;
  result.mean_mm = sum / static_cast<Real>(distances_mm.size());

  std::sort(distances_mm.begin(), distances_mm.end());
  const std::size_t n = distances_mm.size();
  result.median_mm = (n % 2 == 1)
                         ? distances_mm[n / 2]
                         : 0.5 * (distances_mm[n / 2 - 1] + distances_mm[n / 2]);
  return result;
}

PrfResult precision_recall_f1(const PointCloud& predicted,
                              const PointCloud& truth, Real threshold) {
  if (predicted.points.empty() || truth.points.empty()) {
    throw std::runtime_error("precision_recall_f1: empty point cloud");
  }
  const GridIndex index_pred(predicted);
  const GridIndex index_truth(truth);

  std::size_t pred_hits = 0;
  for (const Vec3& p : predicted.points) {
    Real d2 = 0;
    index_truth.nearest(p, &d2);
    if (std::sqrt(d2) < threshold) ++pred_hits;
  }
  std::size_t truth_hits = 0;
  for (const Vec3& p : truth.points) {
    Real d2 = 0;
    index_pred.nearest(p, &d2);
    if (std::sqrt(d2) < threshold) ++truth_hits;
  }

  PrfResult result;
  result.precision =
      static_cast<Real>(pred_hits) / static_cast<Real>(predicted.points.size());
  result.recall =
      static_cast<Real>(truth_hits) / static_cast<Real>(truth.points.size());
  const Real denom = result.precision + result.recall;
  result.f1 = denom > 0 ? 2.0 * result.precision * result.recall / denom : 0.0;
  return result;
}

std::string format_metric_report(const MetricReport& report) {
  std::ostringstream out;
  out << "psnr_db        " << format_real(report.psnr_db) << "\n";
  out << "chamfer_mean   " << format_real(report.chamfer.mean_mm) << " mm\n";
  out << "chamfer_median " << format_real(report.chamfer.median_mm) << " mm\n";
  out << "precision      " << format_real(report.prf.precision) << "\n";
  out << "recall         " << format_real(report.prf.recall) << "\n";
  out << "f1             " << format_real(report.prf.f1) << "\n";
  out << "threshold      " << format_real(report.threshold) << " m\n";
  return out.str();
}

std::string metric_report_csv_header() {
  return "psnr_db,chamfer_mean_mm,chamfer_median_mm,precision,recall,f1,"
         "threshold_m";
}

std::string metric_report_csv_row(const MetricReport& report) {
  std::ostringstream out;
  out << format_real(report.psnr_db) << ',' << format_real(report.chamfer.mean_mm)
      << ',' << format_real(report.chamfer.median_mm) << ','
      << format_real(report.prf.precision) << ',' << format_real(report.prf.recall)
      << ',' << format_real(report.prf.f1) << ','
      << format_real(report.threshold);
  return out.str();
}

}  // namespace vfield
