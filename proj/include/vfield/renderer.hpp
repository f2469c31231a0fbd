#pragma once

#include <functional>

#include "vfield/camera.hpp"
#include "vfield/density.hpp"
#include "vfield/image.hpp"
#include "vfield/rng.hpp"
#include "vfield/tape.hpp"
#include "vfield/types.hpp"

namespace vfield {

/// Hierarchical sampling schedule: N_c coarse samples always; the fine count
/// grows by n_f_inc every n_inc epochs from n_f_start up to n_f_max.
struct SamplerConfig {
  int n_c = 100;
  int n_f = 0;  ///< fine count currently in effect
  int n_f_max = 100;
  int n_f_inc = 5;
  int n_inc = 50;
  Real d_samples = 0.30;  ///< fine window width around the density peak [m]
  int n_f_start = 0;
};

/// n_f = min(n_f_max, n_f_start + n_f_inc * floor(epoch / n_inc)).
SamplerConfig update_fine_count(SamplerConfig cfg, int epoch);

/// n_c+1 strictly increasing distances in [near, far]. With `jitter` null the
/// samples are exactly evenly spaced including both endpoints (the mode used
/// for rendering); otherwise one uniform draw per equal-width bin.
Vec coarse_samples(Real near, Real far, int n_c, Rng* jitter);

/// Places n_f evenly spaced samples across a window of width d_samples
/// centered on the sample with the largest quadrature weight
/// T_i * (1 - exp(-sigma_i * delta_i)) — the first density peak the
/// transmittance actually reaches (ties to the lowest index) — clips them
/// to [near, far], merges with the coarse samples, sorts, and drops points
/// closer than 1e-9 m to their predecessor.
Vec fine_samples(const Vec& coarse_t, const RowVec& sigma, int n_f, Real d_samples, Real near,
                 Real far);

/// Quadrature rendering of one ray. `t` has N+1 increasing distances, `sigma`
/// the N densities, `colors` one RGB column per density sample (3 x N).
/// alpha_i = 1 - exp(-sigma_i * delta_i), T_i = exp(-sum_{j<i} sigma_j delta_j),
/// C = sum T_i alpha_i c_i, D = sum T_i alpha_i t_i (unnormalized — a nearly
/// transparent ray yields a depth near zero rather than an average).
struct RenderOutput {
  Vec3 color = Vec3::Zero();
  Real depth = 0;
  Vec transmittance{0};  ///< T_i per density sample, non-increasing from 1
  Real weight_sum = 0;   ///< sum of T_i * alpha_i, in [0, 1]
};
RenderOutput render_ray(const Vec& t, const RowVec& sigma, const Mat& colors);

/// Traced twin of render_ray; sample distances stay constants (the sampler is
/// not differentiated through). sigma and colors are 1 x N and 3 x N nodes.
struct TracedRender {
  NodeId color;    ///< 3 x 1
  NodeId depth;    ///< 1 x 1
  NodeId weights;  ///< 1 x N, T_i * alpha_i
};
TracedRender render_ray(Tape& tape, const Vec& t, NodeId sigma, NodeId colors);

/// Field and color callbacks let the same frame renderer drive either the
/// learned networks or the analytic oracle field.
struct FieldBatch {
  Mat v;  ///< 3 x P
  Mat z;  ///< feature rows x P (0 rows when the field carries no feature)
};
using FieldFn = std::function<FieldBatch(const Mat& x)>;
/// Per-sample RGB for one ray; d is the shared (unit) ray direction.
using RayColorFn = std::function<Mat(const Mat& x, const Mat& v, const Vec3& d, const Mat& z)>;

struct FrameResult {
  Image image;
  DepthMap depth;
};

/// Renders a full frame without tracing: evenly spaced coarse samples, one
/// fine refinement pass on the merged set (when sampler.n_f > 0), quadrature
/// per pixel. Field evaluations are batched over chunks of rays to keep the
/// matrix sizes efficient.
FrameResult render_frame(const Camera& camera, Real near, Real far, const SamplerConfig& sampler,
                         const WindowWeights& window, const DensityParams& density,
                         const FieldFn& field, const RayColorFn& color);

}  // namespace vfield
