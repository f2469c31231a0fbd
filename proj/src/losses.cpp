#include "vfield/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace vfield {

Real weighted_total(const LossWeights& w, const BatchLosses& losses) {
  return w.w_c * losses.l_c + w.w_depth * losses.l_depth + w.w_norm * losses.l_norm +
         w.w_ext * losses.l_ext + w.w_cen * losses.l_cen;
}

namespace {

void require_same_shape(const char* what, const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::runtime_error(std::string(what) + ": shape mismatch");
  }
}

}  // namespace

Real color_l1(const Mat& pred, const Mat& ref) {
  require_same_shape("color_l1", pred, ref);
  if (pred.cols() == 0) throw std::runtime_error("color_l1: empty batch");
  return (pred - ref).cwiseAbs().sum() / static_cast<Real>(pred.cols());
}

Real depth_l1(const Vec& pred, const Vec& ref) {
  if (pred.size() != ref.size()) throw std::runtime_error("depth_l1: size mismatch");
  if (pred.size() == 0) throw std::runtime_error("depth_l1: empty batch");
  return (pred - ref).cwiseAbs().sum() / static_cast<Real>(pred.size());
}

Real norm_deviation(const Mat& v) {
  if (v.cols() == 0) throw std::runtime_error("norm_deviation: empty batch");
  Real sum = 0;
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    const Real d = v.col(j).norm() - 1.0;
    sum += d * d;
  }
  return sum / static_cast<Real>(v.cols());
}

Real radial_distance(const Mat& v, const Mat& target) {
  require_same_shape("radial_distance", v, target);
  if (v.cols() == 0) throw std::runtime_error("radial_distance: empty batch");
  Real sum = 0;
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    sum += (v.col(j) - target.col(j)).norm();
  }
  return sum / static_cast<Real>(v.cols());
}

Mat radial_targets(const Vec3& c_scene, const Mat& x, bool inward) {
  Mat out(3, x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Vec3 d = inward ? Vec3(c_scene - x.col(j)) : Vec3(x.col(j) - c_scene);
    out.col(j) = d / std::max(d.norm(), kNormFloor);
  }
  return out;
}

NodeId sum_abs_diff(Tape& tape, NodeId pred, const Mat& ref) {
  return tape.sum(tape.abs_of(tape.sub(pred, tape.constant(ref))));
}

NodeId sum_norm_deviation_sq(Tape& tape, NodeId v) {
  const NodeId dev = tape.add_scalar(tape.colnorm(v), -1.0);
  return tape.sum(tape.cmul(dev, dev));
}

NodeId sum_radial_distance(Tape& tape, NodeId v, const Mat& target) {
  return tape.sum(tape.colnorm(tape.sub(v, tape.constant(target))));
}

namespace {

/// Radius with uniform volume density between r_inner and r_outer.
Real shell_radius(Real r_inner, Real r_outer, Real u) {
  const Real lo = r_inner * r_inner * r_inner;
  const Real hi = r_outer * r_outer * r_outer;
  return std::cbrt(lo + u * (hi - lo));
}

}  // namespace

Mat sample_shell(const Vec3& center, Real r_inner, Real r_outer, int count, Rng& rng) {
  if (!(0 <= r_inner && r_inner < r_outer)) {
    throw std::runtime_error("sample_shell: need 0 <= r_inner < r_outer");
  }
  Mat out(3, count);
  for (int j = 0; j < count; ++j) {
    // Two rng draws in one expression would have unspecified order; sequence
    // them explicitly so the stream layout is part of the contract.
    const Real r = shell_radius(r_inner, r_outer, rng.uniform());
    out.col(j) = center + r * rng.unit_vector();
  }
  return out;
}

Mat sample_ball(const Vec3& center, Real radius, int count, Rng& rng) {
  if (radius <= 0) throw std::runtime_error("sample_ball: radius must be positive");
  return sample_shell(center, 0.0, radius, count, rng);
}

}  // namespace vfield
