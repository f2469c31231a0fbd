#pragma once

#include "vfield/rng.hpp"
#include "vfield/tape.hpp"
#include "vfield/types.hpp"

namespace vfield {

/// Weights of the five training objectives; zero disables a term.
struct LossWeights {
  Real w_c = 1.0;
  Real w_depth = 0.25;
  Real w_norm = 0.05;
  Real w_ext = 0.5;
  Real w_cen = 0.5;
};

/// Per-batch loss components (each already averaged over its own population).
struct BatchLosses {
  Real l_c = 0;
  Real l_depth = 0;
  Real l_norm = 0;
  Real l_ext = 0;
  Real l_cen = 0;
  Real total = 0;
  int depth_pixels = 0;  ///< pixels that contributed to l_depth (misses excluded)
};

Real weighted_total(const LossWeights& w, const BatchLosses& losses);

// ---- plain evaluators (logging, tests, and the traced twins' oracles) ----

/// Mean over columns of ||pred - ref||_1.
Real color_l1(const Mat& pred, const Mat& ref);
/// Mean absolute difference.
Real depth_l1(const Vec& pred, const Vec& ref);
/// Mean over columns of (||v_j||_2 - 1)^2.
Real norm_deviation(const Mat& v);
/// Mean over columns of the Euclidean distance ||v_j - target_j||_2.
Real radial_distance(const Mat& v, const Mat& target);

/// Unit vectors from x toward the center (inward) or away from it (outward),
/// one column per input point. Norms are floored at kNormFloor, so a point
/// exactly at the center yields the zero vector instead of NaN.
Mat radial_targets(const Vec3& c_scene, const Mat& x, bool inward);

// ---- traced builders ----
// Each returns the UNSCALED sum so the caller can divide by a whole-batch
// denominator: per-chunk backward passes then accumulate exactly the gradient
// of the batch mean.

/// sum |pred - ref| over all entries.
NodeId sum_abs_diff(Tape& tape, NodeId pred, const Mat& ref);
/// sum over columns of (||v_j||_2 - 1)^2.
NodeId sum_norm_deviation_sq(Tape& tape, NodeId v);
/// sum over columns of ||v_j - target_j||_2.
NodeId sum_radial_distance(Tape& tape, NodeId v, const Mat& target);

// ---- regularization point sampling ----

/// `count` points uniform (by volume) in the spherical shell
/// r_inner <= ||x - center|| <= r_outer.
Mat sample_shell(const Vec3& center, Real r_inner, Real r_outer, int count, Rng& rng);
/// `count` points uniform (by volume) in the ball of the given radius.
Mat sample_ball(const Vec3& center, Real radius, int count, Rng& rng);

}  // namespace vfield
