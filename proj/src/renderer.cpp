#include "vfield/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace vfield {
namespace {

constexpr Real kMinSampleGap = 1e-9;  // dedup threshold for merged samples [m]
constexpr int kFrameChunkRays = 256;

void check_span(Real near, Real far) {
  if (!(near < far)) throw std::runtime_error("sampler: requires near < far");
}

}  // namespace

SamplerConfig update_fine_count(SamplerConfig cfg, int epoch) {
  if (epoch < 0) throw std::runtime_error("update_fine_count: epoch must be >= 0");
  if (cfg.n_inc < 1) throw std::runtime_error("update_fine_count: n_inc must be >= 1");
  cfg.n_f = std::min(cfg.n_f_max, cfg.n_f_start + cfg.n_f_inc * (epoch / cfg.n_inc));
  return cfg;
}

Vec coarse_samples(Real near, Real far, int n_c, Rng* jitter) {
  check_span(near, far);
  if (n_c < 2) throw std::runtime_error("coarse_samples: n_c must be >= 2");
  Vec t(n_c + 1);
  if (jitter == nullptr) {
    for (int i = 0; i <= n_c; ++i) {
      t[i] = near + (far - near) * static_cast<Real>(i) / n_c;
    }
    t[n_c] = far;  // guard the endpoint against rounding
  } else {
    const Real h = (far - near) / (n_c + 1);
    for (int i = 0; i <= n_c; ++i) {
      t[i] = near + (static_cast<Real>(i) + jitter->uniform()) * h;
    }
  }
  return t;
}

Vec fine_samples(const Vec& coarse_t, const RowVec& sigma, int n_f, Real d_samples, Real near,
                 Real far) {
  check_span(near, far);
  if (n_f < 0) throw std::runtime_error("fine_samples: n_f must be >= 0");
  if (sigma.size() != coarse_t.size() - 1) {
    throw std::runtime_error("fine_samples: sigma length must be sample count - 1");
  }
  if (n_f == 0) return coarse_t;
  // Center the window on the largest quadrature weight T * (1 - exp(-sigma *
  // delta)), not on raw sigma: a ray can cross several equally sharp density
  // peaks (front and back of a closed object), and only the first one the
  // transmittance reaches contributes to the pixel.
  Eigen::Index peak = 0;
  {
    Real transmittance = 1.0;
    Real best = -1.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
      const Real delta = coarse_t[i + 1] - coarse_t[i];
      const Real alpha = 1.0 - std::exp(-sigma[i] * delta);
      const Real weight = transmittance * alpha;
      if (weight > best) {
        best = weight;
        peak = i;
      }
      transmittance *= 1.0 - alpha;
    }
  }
  const Real center = coarse_t[peak];
  std::vector<Real> merged(coarse_t.data(), coarse_t.data() + coarse_t.size());
  merged.reserve(merged.size() + n_f);
  for (int k = 0; k < n_f; ++k) {
    const Real offset =
        n_f == 1 ? 0.0 : -0.5 * d_samples + d_samples * static_cast<Real>(k) / (n_f - 1);
    merged.push_back(std::clamp(center + offset, near, far));
  }
  std::sort(merged.begin(), merged.end());
  Vec out(static_cast<Eigen::Index>(merged.size()));
  Eigen::Index count = 0;
  for (Real value : merged) {
    if (count > 0 && value - out[count - 1] < kMinSampleGap) continue;
    out[count++] = value;
  }
  return out.head(count);
}

RenderOutput render_ray(const Vec& t, const RowVec& sigma, const Mat& colors) {
  const Eigen::Index n = sigma.size();
  if (t.size() != n + 1) throw std::runtime_error("render_ray: need N+1 distances for N sigmas");
  if (colors.rows() != 3 || colors.cols() != n) {
    throw std::runtime_error("render_ray: colors must be 3 x N");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(sigma[i])) {
      throw std::runtime_error("render_ray: non-finite density at sample " + std::to_string(i));
    }
  }
  RowVec sig_delta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Real delta = t[i + 1] - t[i];
    if (!(delta > 0)) throw std::runtime_error("render_ray: sample distances must increase");
    sig_delta[i] = sigma[i] * delta;
  }
  RenderOutput out;
  out.transmittance = Vec(n);
  RowVec weights(n);
  Real accumulated = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Real trans = std::exp(-accumulated);
    out.transmittance[i] = trans;
    weights[i] = trans * (1.0 - std::exp(-sig_delta[i]));
    accumulated += sig_delta[i];
  }
  out.color = colors * weights.transpose();
  out.depth = (weights * t.head(n))(0);
  out.weight_sum = weights.sum();
  return out;
}

TracedRender render_ray(Tape& tape, const Vec& t, NodeId sigma, NodeId colors) {
  const Eigen::Index n = tape.value(sigma).cols();
  if (tape.value(sigma).rows() != 1) throw std::runtime_error("render_ray: sigma must be 1 x N");
  if (t.size() != n + 1) throw std::runtime_error("render_ray: need N+1 distances for N sigmas");
  if (tape.value(colors).rows() != 3 || tape.value(colors).cols() != n) {
    throw std::runtime_error("render_ray: colors must be 3 x N");
  }
  Mat delta(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    delta(0, i) = t[i + 1] - t[i];
    if (!(delta(0, i) > 0)) throw std::runtime_error("render_ray: sample distances must increase");
  }
  const NodeId sig_delta = tape.cmul(sigma, tape.constant(std::move(delta)));
  const NodeId trans = tape.exp_of(tape.scale(tape.cumsum_cols_exclusive(sig_delta), -1.0));
  const NodeId ones = tape.constant(Mat::Ones(1, n));
  const NodeId absorb = tape.sub(ones, tape.exp_of(tape.scale(sig_delta, -1.0)));
  const NodeId weights = tape.cmul(trans, absorb);
  TracedRender out;
  out.weights = weights;
  out.color = tape.matmul(colors, tape.transpose(weights));
  out.depth = tape.matmul(weights, tape.constant(t.head(n)));
  return out;
}

FrameResult render_frame(const Camera& camera, Real near, Real far, const SamplerConfig& sampler,
                         const WindowWeights& window, const DensityParams& density,
                         const FieldFn& field, const RayColorFn& color) {
  check_span(near, far);
  FrameResult result;
  result.image = Image::zeros(camera.width, camera.height);
  result.depth = DepthMap::zeros(camera.width, camera.height);
  const std::vector<Ray> rays = camera.all_rays();
  const Vec coarse_t = coarse_samples(near, far, sampler.n_c, nullptr);
  const Eigen::Index coarse_count = coarse_t.size();

  for (size_t begin = 0; begin < rays.size(); begin += kFrameChunkRays) {
    const size_t end = std::min(rays.size(), begin + kFrameChunkRays);
    const Eigen::Index chunk = static_cast<Eigen::Index>(end - begin);

    // Pass 1: evaluate the field on every ray's coarse samples at once.
    Mat coarse_x(3, chunk * coarse_count);
    for (Eigen::Index r = 0; r < chunk; ++r) {
      const Ray& ray = rays[begin + r];
      for (Eigen::Index i = 0; i < coarse_count; ++i) {
        coarse_x.col(r * coarse_count + i) = ray.origin + coarse_t[i] * ray.dir;
      }
    }
    const FieldBatch coarse_field = field(coarse_x);

    // Per-ray refinement: density peak -> merged sample set.
    std::vector<Vec> merged(chunk);
    std::vector<Eigen::Index> offsets(chunk + 1);
    offsets[0] = 0;
    for (Eigen::Index r = 0; r < chunk; ++r) {
      const Mat v = coarse_field.v.middleCols(r * coarse_count, coarse_count);
      const RowVec c_sim = windowed_cosine(v, window);
      const RowVec sigma = vfield::density(c_sim, density);
      merged[r] = sampler.n_f > 0
                      ? fine_samples(coarse_t, sigma, sampler.n_f, sampler.d_samples, near, far)
                      : coarse_t;
      offsets[r + 1] = offsets[r] + merged[r].size();
    }

    // Pass 2: evaluate the field on the merged samples and render.
    Mat merged_x(3, offsets[chunk]);
    for (Eigen::Index r = 0; r < chunk; ++r) {
      const Ray& ray = rays[begin + r];
      for (Eigen::Index i = 0; i < merged[r].size(); ++i) {
        merged_x.col(offsets[r] + i) = ray.origin + merged[r][i] * ray.dir;
      }
    }
    const FieldBatch merged_field = field(merged_x);
    for (Eigen::Index r = 0; r < chunk; ++r) {
      const Ray& ray = rays[begin + r];
      const Eigen::Index count = merged[r].size();
      const Mat x = merged_x.middleCols(offsets[r], count);
      const Mat v = merged_field.v.middleCols(offsets[r], count);
      const Mat z = merged_field.z.cols() > 0 ? Mat(merged_field.z.middleCols(offsets[r], count))
                                              : Mat(0, count);
      const RowVec c_sim = windowed_cosine(v, window);
      const RowVec sigma = vfield::density(c_sim, density);
      const Eigen::Index n = count - 1;
      const Mat rgb = color(x.leftCols(n), v.leftCols(n), ray.dir, z.cols() > 0 ? Mat(z.leftCols(n)) : Mat(0, n));
      const RenderOutput rendered = render_ray(merged[r], sigma, rgb);
      const Eigen::Index pixel = static_cast<Eigen::Index>(ray.row) * camera.width + ray.col;
      result.image.rgb.col(pixel) = rendered.color;
      result.depth.depth[pixel] = rendered.depth;
    }
  }
  return result;
}

}  // namespace vfield
