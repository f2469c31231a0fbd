#include "vfield/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "vfield/adam.hpp"
#include "vfield/checkpoint.hpp"
#include "vfield/density.hpp"
#include "vfield/metrics.hpp"
#include "vfield/renderer.hpp"
#include "vfield/textio.hpp"

namespace vfield {

namespace {

// Stream salts: every random decision derives from (seed, salt, epoch, batch)
// so a resumed run replays the identical draws.
constexpr std::uint64_t kSaltPretrain = 0x70726574;         // "pret"
constexpr std::uint64_t kSaltPretrainHoldout = 0x70726568;  // "preh"
constexpr std::uint64_t kSaltPixels = 0x70697862;           // "pixb"
constexpr std::uint64_t kSaltCoarse = 0x63727365;           // "crse"
constexpr std::uint64_t kSaltExterior = 0x65787470;         // "extp"
constexpr std::uint64_t kSaltCenter = 0x63656e70;           // "cenp"
constexpr std::uint64_t kSaltDepthNoise = 0x646e6f69;       // "dnoi"

constexpr int kChunkRays = 32;  ///< rays per tape; bounds peak graph memory

/// Reference depths live at f32 precision, so the far-plane sentinel is
/// recognized with a relative margin rather than exact equality.
bool is_depth_miss(Real depth, Real far) { return depth >= far * (1.0 - 1e-6); }

std::string fmt_real(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Mat uniform_in_bounds(const Vec3& lo, const Vec3& hi, int count, Rng& rng) {
  Mat x(3, count);
  for (int j = 0; j < count; ++j) {
    for (int k = 0; k < 3; ++k) x(k, j) = lo[k] + (hi[k] - lo[k]) * rng.uniform();
  }
  return x;
}

DensityParams current_density_params(const ParamStore& store, Real xi) {
  return DensityParams{store.scalar("density/log_alpha"), store.scalar("density/mu"),
                       store.scalar("density/log_beta"), xi};
}

}  // namespace

std::vector<PixelSample> sample_pixel_batch(const Dataset& dataset, int count, Rng& rng,
                                            const std::vector<int>& views) {
  if (dataset.views.empty()) throw std::runtime_error("sample_pixel_batch: empty dataset");
  std::vector<int> use = views;
  if (use.empty()) {
    use.resize(dataset.views.size());
    for (size_t i = 0; i < use.size(); ++i) use[i] = static_cast<int>(i);
  }
  std::int64_t total = 0;
  std::vector<std::int64_t> prefix(use.size() + 1, 0);
  for (size_t i = 0; i < use.size(); ++i) {
    const int v = use[i];
    if (v < 0 || v >= static_cast<int>(dataset.views.size())) {
      throw std::runtime_error("sample_pixel_batch: view index " + std::to_string(v) +
                               " out of range");
    }
    const Camera& cam = dataset.views[static_cast<size_t>(v)].camera;
    total += static_cast<std::int64_t>(cam.width) * cam.height;
    prefix[i + 1] = total;
  }
  if (count < 1) throw std::runtime_error("sample_pixel_batch: count must be >= 1");
  if (count > total) {
    throw std::runtime_error("sample_pixel_batch: requested " + std::to_string(count) +
                             " pixels from a population of " + std::to_string(total));
  }

  // Partial Fisher-Yates over the flat (view, pixel) population: the first
  // `count` entries of the permutation are exactly a without-replacement draw.
  std::vector<std::int64_t> perm(static_cast<size_t>(total));
  for (std::int64_t i = 0; i < total; ++i) perm[static_cast<size_t>(i)] = i;
  std::vector<PixelSample> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::int64_t j = i + static_cast<std::int64_t>(
                                   rng.below(static_cast<std::uint64_t>(total - i)));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
    const std::int64_t flat = perm[static_cast<size_t>(i)];
    const size_t view_pos = static_cast<size_t>(
        std::upper_bound(prefix.begin(), prefix.end(), flat) - prefix.begin() - 1);
    const int view = use[view_pos];
    const std::int64_t local = flat - prefix[view_pos];
    const int width = dataset.views[static_cast<size_t>(view)].camera.width;
    out.push_back(PixelSample{view, static_cast<int>(local / width),
                              static_cast<int>(local % width)});
  }
  return out;
}

PretrainResult pretrain_to_center(ParamStore& store, const VfModel& model, const Scene& scene,
                                  int steps, int batch, Real lr, std::uint64_t seed) {
  OptimizerState opt;
  opt.init(store.size());
  Rng rng(mix_seed(seed, kSaltPretrain));
  for (int step = 0; step < steps; ++step) {
    const Mat x = uniform_in_bounds(scene.bounds_min, scene.bounds_max, batch, rng);
    const Mat target = radial_targets(scene.c_scene, x, /*inward=*/true);
    Tape tape(&store);
    const VfNetwork::TracedOutput out = model.vf().forward(tape, tape.constant(x));
    const NodeId diff = tape.sub(out.v, tape.constant(target));
    const NodeId loss = tape.scale(tape.sum(tape.cmul(diff, diff)), 1.0 / batch);
    tape.backward(loss);
    optimizer_step(opt, store, lr);
  }

  Rng holdout_rng(mix_seed(seed, kSaltPretrainHoldout));
  const int holdout_count = 512;
  const Mat x = uniform_in_bounds(scene.bounds_min, scene.bounds_max, holdout_count, holdout_rng);
  const Mat target = radial_targets(scene.c_scene, x, /*inward=*/true);
  const Mat v = model.vf().forward(store, x).v;
  Real cosine_sum = 0;
  for (int j = 0; j < holdout_count; ++j) {
    cosine_sum += v.col(j).dot(target.col(j)) /
                  (std::max(v.col(j).norm(), kNormFloor) *
                   std::max(target.col(j).norm(), kNormFloor));
  }
  PretrainResult result{steps, cosine_sum / holdout_count};
  if (result.holdout_cosine < 0.9) {
    throw std::runtime_error(
        "pretrain_to_center: field failed to align with the center direction (mean holdout "
        "cosine " +
        fmt_real(result.holdout_cosine) + " after " + std::to_string(steps) +
        " steps; expected >= 0.9)");
  }
  return result;
}

TrainPaths train_paths(const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  return TrainPaths{(dir / "checkpoint.ckpt").string(), (dir / "metrics.csv").string(),
                    (dir / "config.resolved.cfg").string()};
}

namespace {

constexpr const char* kCsvHeader = "epoch,lr,L_c,L_depth,L_norm,L_ext,L_cen,total,psnr_holdout";

std::string numbered_checkpoint_path(const std::string& out_dir, int epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "checkpoint_%06d.ckpt", epoch);
  return (std::filesystem::path(out_dir) / name).string();
}

void apply_depth_noise(Dataset& data, Real near, Real far, Real sigma, std::uint64_t seed) {
  Rng rng(mix_seed(seed, kSaltDepthNoise));
  for (DatasetView& view : data.views) {
    for (Eigen::Index i = 0; i < view.depth.depth.size(); ++i) {
      Real& d = view.depth.depth[i];
      if (is_depth_miss(d, far)) continue;
      d = std::max(near, d + sigma * rng.gaussian());
    }
  }
}

/// Keeps the CSV rows from completed epochs below start_epoch (the resumed
/// run recomputes the rest identically), so an interrupted-then-resumed run
/// produces the same file as an uninterrupted one.
void trim_metrics_for_resume(const std::string& path, int start_epoch) {
  std::string kept = std::string(kCsvHeader) + "\n";
  if (std::filesystem::exists(path)) {
    const std::string text = read_text_file(path);
    size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
      size_t end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      const std::string line = text.substr(pos, end - pos);
      pos = end + 1;
      if (first) {
        first = false;  // header, already in `kept`
        continue;
      }
      if (line.empty()) continue;
      const int epoch = std::atoi(line.c_str());
      if (epoch < start_epoch) kept += line + "\n";
    }
  }
  write_text_file_atomic(path, kept);
}

struct RayTarget {
  Vec3 origin;
  Vec3 dir;
  Vec3 rgb;
  Real depth = 0;
  bool depth_valid = false;
};

struct BatchRunInputs {
  const Dataset& data;
  const Scene& scene;
  const TrainConfig& cfg;
  const VfModel& model;
  ParamStore& store;
  const WindowWeights& window;
  const SamplerConfig& sampler;
  const std::vector<int>& train_views;
  int epoch = 0;
  int batch = 0;
};

BatchLosses run_batch(const BatchRunInputs& in) {
  const LossWeights w = in.cfg.weights();
  const std::uint64_t seed = in.cfg.seed();
  const int ray_count = in.cfg.rays_per_batch();
  const Real near = in.scene.near;
  const Real far = in.scene.far;
  const Real xi = in.cfg.get_real("xi");

  // Pixel batch -> per-ray targets.
  Rng pixel_rng(mix_seed(seed, kSaltPixels, static_cast<std::uint64_t>(in.epoch),
                         static_cast<std::uint64_t>(in.batch)));
  const std::vector<PixelSample> pixels =
      sample_pixel_batch(in.data, ray_count, pixel_rng, in.train_views);
  std::vector<RayTarget> rays(pixels.size());
  int depth_valid_count = 0;
  for (size_t r = 0; r < pixels.size(); ++r) {
    const PixelSample& p = pixels[r];
    const DatasetView& view = in.data.views[static_cast<size_t>(p.view)];
    const Ray ray = view.camera.ray(p.row, p.col);
    const Eigen::Index pixel = static_cast<Eigen::Index>(p.row) * view.camera.width + p.col;
    rays[r].origin = ray.origin;
    rays[r].dir = ray.dir;
    rays[r].rgb = view.image.rgb.col(pixel);
    rays[r].depth = view.depth.depth[pixel];
    rays[r].depth_valid = !is_depth_miss(rays[r].depth, far);
    if (rays[r].depth_valid) ++depth_valid_count;
  }

  // Jittered coarse sampling and one batched untraced field pass to find the
  // density peaks; gradients do not flow through sample placement.
  Rng coarse_rng(mix_seed(seed, kSaltCoarse, static_cast<std::uint64_t>(in.epoch),
                          static_cast<std::uint64_t>(in.batch)));
  const int coarse_count = in.sampler.n_c + 1;
  std::vector<Vec> coarse_t(rays.size());
  Mat coarse_x(3, static_cast<Eigen::Index>(rays.size()) * coarse_count);
  for (size_t r = 0; r < rays.size(); ++r) {
    coarse_t[r] = coarse_samples(near, far, in.sampler.n_c, &coarse_rng);
    for (int i = 0; i < coarse_count; ++i) {
      coarse_x.col(static_cast<Eigen::Index>(r) * coarse_count + i) =
          rays[r].origin + coarse_t[r][i] * rays[r].dir;
    }
  }
  const Mat coarse_v = in.model.vf().forward(in.store, coarse_x).v;
  const DensityParams dp = current_density_params(in.store, xi);

  std::vector<Vec> merged(rays.size());
  std::int64_t total_samples = 0;
  for (size_t r = 0; r < rays.size(); ++r) {
    const Mat v = coarse_v.middleCols(static_cast<Eigen::Index>(r) * coarse_count, coarse_count);
    const RowVec c_sim = windowed_cosine(v, in.window);
    const RowVec sigma = density(c_sim, dp);
    merged[r] = in.sampler.n_f > 0 ? fine_samples(coarse_t[r], sigma, in.sampler.n_f,
                                                  in.sampler.d_samples, near, far)
                                   : coarse_t[r];
    total_samples += merged[r].size();
  }

  // Traced passes in chunks; every term is scaled by its whole-batch
  // denominator so per-chunk backward calls accumulate the batch gradient.
  const bool need_render = w.w_c > 0 || w.w_depth > 0;
  BatchLosses out;
  out.depth_pixels = depth_valid_count;
  Real c_sum = 0, d_sum = 0, n_sum = 0;
  Real optimized_total = 0;

  for (size_t begin = 0; begin < rays.size(); begin += kChunkRays) {
    const size_t end = std::min(rays.size(), begin + kChunkRays);
    std::vector<Eigen::Index> offsets(end - begin + 1, 0);
    for (size_t r = begin; r < end; ++r) {
      offsets[r - begin + 1] = offsets[r - begin] + merged[r].size();
    }
    Mat chunk_x(3, offsets.back());
    for (size_t r = begin; r < end; ++r) {
      for (Eigen::Index i = 0; i < merged[r].size(); ++i) {
        chunk_x.col(offsets[r - begin] + i) = rays[r].origin + merged[r][i] * rays[r].dir;
      }
    }

    Tape tape(&in.store);
    const DensityNodes dn = trace_density_params(tape);
    const NodeId x_node = tape.constant(chunk_x);
    const VfNetwork::TracedOutput field = in.model.vf().forward(tape, x_node);

    NodeId color_sum = -1, depth_sum = -1, norm_sum = -1;
    const auto accumulate = [&tape](NodeId& into, NodeId term) {
      into = into < 0 ? term : tape.add(into, term);
    };
    for (size_t r = begin; r < end; ++r) {
      const Eigen::Index off = offsets[r - begin];
      const Eigen::Index cnt = merged[r].size();
      const NodeId v_ray = tape.cols(field.v, off, cnt);
      accumulate(norm_sum, sum_norm_deviation_sq(tape, v_ray));
      if (!need_render) continue;
      const NodeId c_sim = windowed_cosine(tape, v_ray, in.window);
      const NodeId sigma = density(tape, c_sim, dn, xi);
      const Mat dir_cols = rays[r].dir.replicate(1, cnt - 1);
      const NodeId rgb = in.model.color().forward(tape, tape.cols(x_node, off, cnt - 1),
                                                  tape.cols(field.v, off, cnt - 1),
                                                  tape.constant(dir_cols),
                                                  tape.cols(field.z, off, cnt - 1));
      const TracedRender rendered = render_ray(tape, merged[r], sigma, rgb);
      const NodeId c_term = sum_abs_diff(tape, rendered.color, rays[r].rgb);
      accumulate(color_sum, c_term);
      c_sum += tape.value(c_term)(0, 0);
      if (rays[r].depth_valid) {
        Mat ref(1, 1);
        ref(0, 0) = rays[r].depth;
        const NodeId d_term = sum_abs_diff(tape, rendered.depth, ref);
        d_sum += tape.value(d_term)(0, 0);
        if (w.w_depth > 0) accumulate(depth_sum, d_term);
      }
    }
    n_sum += norm_sum >= 0 ? tape.value(norm_sum)(0, 0) : 0;

    NodeId root = -1;
    if (color_sum >= 0 && w.w_c > 0) {
      accumulate(root, tape.scale(color_sum, w.w_c / ray_count));
    }
    if (depth_sum >= 0 && depth_valid_count > 0) {
      accumulate(root, tape.scale(depth_sum, w.w_depth / depth_valid_count));
    }
    if (norm_sum >= 0 && w.w_norm > 0) {
      accumulate(root, tape.scale(norm_sum, w.w_norm / static_cast<Real>(total_samples)));
    }
    if (root >= 0) {
      optimized_total += tape.value(root)(0, 0);
      tape.backward(root);
    }
  }

  out.l_c = need_render ? c_sum / ray_count : 0;
  out.l_depth = depth_valid_count > 0 && need_render ? d_sum / depth_valid_count : 0;
  out.l_norm = total_samples > 0 ? n_sum / static_cast<Real>(total_samples) : 0;

  // Radial regularization on its own tape, once per batch.
  const int n_ext = in.cfg.n_ext();
  const int n_cen = in.cfg.n_cen();
  if (n_ext > 0 || n_cen > 0) {
    const Real radius = in.scene.bounds_circumradius();
    Tape tape(&in.store);
    NodeId root = -1;
    const auto accumulate = [&tape, &root](NodeId term) {
      root = root < 0 ? term : tape.add(root, term);
    };
    if (n_ext > 0) {
      Rng rng(mix_seed(seed, kSaltExterior, static_cast<std::uint64_t>(in.epoch),
                       static_cast<std::uint64_t>(in.batch)));
      const Mat x = sample_shell(in.scene.c_scene, in.cfg.ext_shell_inner() * radius,
                                 in.cfg.ext_shell_outer() * radius, n_ext, rng);
      const Mat target = radial_targets(in.scene.c_scene, x, /*inward=*/true);
      const NodeId v = in.model.vf().forward(tape, tape.constant(x)).v;
      const NodeId term = sum_radial_distance(tape, v, target);
      out.l_ext = tape.value(term)(0, 0) / n_ext;
      if (w.w_ext > 0) accumulate(tape.scale(term, w.w_ext / n_ext));
    }
    if (n_cen > 0) {
      Rng rng(mix_seed(seed, kSaltCenter, static_cast<std::uint64_t>(in.epoch),
                       static_cast<std::uint64_t>(in.batch)));
      const Mat x = sample_ball(in.scene.c_scene, in.cfg.cen_ball_radius() * radius, n_cen, rng);
      const Mat target = radial_targets(in.scene.c_scene, x, /*inward=*/false);
      const NodeId v = in.model.vf().forward(tape, tape.constant(x)).v;
      const NodeId term = sum_radial_distance(tape, v, target);
      out.l_cen = tape.value(term)(0, 0) / n_cen;
      if (w.w_cen > 0) accumulate(tape.scale(term, w.w_cen / n_cen));
    }
    if (root >= 0) {
      optimized_total += tape.value(root)(0, 0);
      tape.backward(root);
    }
  }

  out.total = weighted_total(w, out);
  if (!std::isfinite(out.total) || !std::isfinite(out.l_c) || !std::isfinite(out.l_depth) ||
      !std::isfinite(out.l_norm) || !std::isfinite(out.l_ext) || !std::isfinite(out.l_cen)) {
    throw std::runtime_error("non-finite loss (total " + fmt_real(out.total) + ", L_c " +
                             fmt_real(out.l_c) + ", L_depth " + fmt_real(out.l_depth) +
                             ", L_norm " + fmt_real(out.l_norm) + ", L_ext " +
                             fmt_real(out.l_ext) + ", L_cen " + fmt_real(out.l_cen) + ")");
  }
  // The optimized objective and the reported weighted sum must agree; a
  // mismatch means a term was scaled by the wrong denominator.
  if (std::abs(optimized_total - out.total) > 1e-12) {
    throw std::logic_error("batch loss bookkeeping mismatch: optimized " +
                           fmt_real(optimized_total) + " vs reported " + fmt_real(out.total));
  }
  return out;
}

Real holdout_psnr(const DatasetView& holdout, const VfModel& model, const ParamStore& store,
                  const SamplerConfig& sampler, const WindowWeights& window,
                  const DensityParams& dp, Real near, Real far) {
  const FieldFn field = [&](const Mat& x) {
    VfNetwork::Output out = model.vf().forward(store, x);
    return FieldBatch{std::move(out.v), std::move(out.z)};
  };
  const RayColorFn color = [&](const Mat& x, const Mat& v, const Vec3& d, const Mat& z) {
    return model.color().forward(store, x, v, Mat(d.replicate(1, x.cols())), z);
  };
  const FrameResult frame =
      render_frame(holdout.camera, near, far, sampler, window, dp, field, color);
  return psnr(frame.image, holdout.image);
}

}  // namespace

TrainResult train(const Dataset& dataset, const Scene& scene, const TrainConfig& cfg,
                  const std::string& out_dir, bool resume, std::ostream& log) {
  cfg.validate();
  if (dataset.views.empty()) throw std::runtime_error("train: empty dataset");
  const int holdout = cfg.holdout_view();
  if (holdout >= static_cast<int>(dataset.views.size())) {
    throw std::runtime_error("train: holdout_view " + std::to_string(holdout) +
                             " out of range for " + std::to_string(dataset.views.size()) +
                             " views");
  }
  std::vector<int> train_views;
  for (int v = 0; v < static_cast<int>(dataset.views.size()); ++v) {
    if (v != holdout) train_views.push_back(v);
  }
  if (train_views.empty()) throw std::runtime_error("train: no views left to train on");

  const VfModel model(cfg.model());
  ParamStore store;
  model.register_params(store);

  std::filesystem::create_directories(out_dir);
  const TrainPaths paths = train_paths(out_dir);
  const std::string config_text = cfg.to_text();

  OptimizerState opt;
  opt.base_lr = cfg.lr();
  opt.decay_rate = cfg.lr_decay();
  int start_epoch = 0;
  TrainResult result;

  if (resume) {
    const TrainCheckpoint ckpt = load_checkpoint(paths.checkpoint);
    if (ckpt.config_text != config_text) {
      throw std::runtime_error(paths.checkpoint +
                               ": embedded config differs from the current one; resuming "
                               "requires identical settings");
    }
    if (ckpt.params.size() != store.size()) {
      throw std::runtime_error(paths.checkpoint + ": parameter count mismatch");
    }
    store.values() = ckpt.params;
    opt.step = ckpt.opt_step;
    opt.m = ckpt.opt_m;
    opt.v = ckpt.opt_v;
    start_epoch = ckpt.epoch;
    trim_metrics_for_resume(paths.metrics, start_epoch);
    log << "resumed from " << paths.checkpoint << " at epoch " << start_epoch << "\n";
    if (start_epoch >= cfg.epochs()) {
      log << "training already complete (" << start_epoch << " epochs)\n";
      result.epochs_completed = start_epoch;
      return result;
    }
  } else {
    model.initialize(store, cfg.seed());
    if (cfg.pretrain_steps() > 0) {
      result.pretrain = pretrain_to_center(store, model, scene, cfg.pretrain_steps(),
                                           cfg.pretrain_batch(), cfg.pretrain_lr(), cfg.seed());
      log << "pretrain: holdout cosine " << fmt_real(result.pretrain.holdout_cosine) << " after "
          << result.pretrain.steps << " steps"
          << (result.pretrain.holdout_cosine < 0.99 ? " (below the 0.99 target)" : "") << "\n";
    }
    opt.init(store.size());
    write_text_file_atomic(paths.resolved_config, config_text);
    write_text_file_atomic(paths.metrics, std::string(kCsvHeader) + "\n");
  }

  Dataset data = dataset;
  if (cfg.depth_noise_sigma() > 0) {
    apply_depth_noise(data, scene.near, scene.far, cfg.depth_noise_sigma(), cfg.seed());
  }

  std::ofstream csv(paths.metrics, std::ios::app);
  if (!csv) throw std::runtime_error(paths.metrics + ": cannot open for writing");

  for (int epoch = start_epoch; epoch < cfg.epochs(); ++epoch) {
    const Real lr_epoch = decayed_lr(cfg.lr(), cfg.lr_decay(), epoch, cfg.epochs());
    const int clock = anneal_clock(epoch, cfg.anneal_start(), cfg.anneal_end());
    const WindowWeights window =
        anneal_weights(cfg.window_m(), clock, cfg.anneal_end() - cfg.anneal_start());
    const SamplerConfig sampler = update_fine_count(cfg.sampler(), epoch);

    BatchLosses mean;
    try {
      for (int batch = 0; batch < cfg.batches_per_epoch(); ++batch) {
        const BatchLosses losses = run_batch(BatchRunInputs{
            data, scene, cfg, model, store, window, sampler, train_views, epoch, batch});
        optimizer_step(opt, store, lr_epoch);
        mean.l_c += losses.l_c;
        mean.l_depth += losses.l_depth;
        mean.l_norm += losses.l_norm;
        mean.l_ext += losses.l_ext;
        mean.l_cen += losses.l_cen;
        mean.total += losses.total;
        mean.depth_pixels += losses.depth_pixels;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("training aborted at epoch " + std::to_string(epoch) + ": " +
                               e.what() + " (last checkpoint: " +
                               (std::filesystem::exists(paths.checkpoint) ? paths.checkpoint
                                                                          : "none") +
                               ")");
    }
    const Real inv_batches = 1.0 / cfg.batches_per_epoch();
    mean.l_c *= inv_batches;
    mean.l_depth *= inv_batches;
    mean.l_norm *= inv_batches;
    mean.l_ext *= inv_batches;
    mean.l_cen *= inv_batches;
    mean.total *= inv_batches;

    const bool last_epoch = epoch + 1 == cfg.epochs();
    const bool do_psnr = holdout >= 0 && ((epoch + 1) % cfg.psnr_every() == 0 || last_epoch);
    Real psnr_value = 0;
    if (do_psnr) {
      psnr_value = holdout_psnr(dataset.views[static_cast<size_t>(holdout)], model, store,
                                sampler, window,
                                current_density_params(store, cfg.get_real("xi")), scene.near,
                                scene.far);
      result.last_psnr = psnr_value;
    }

    csv << epoch << ',' << fmt_real(lr_epoch) << ',' << fmt_real(mean.l_c) << ','
        << fmt_real(mean.l_depth) << ',' << fmt_real(mean.l_norm) << ',' << fmt_real(mean.l_ext)
        << ',' << fmt_real(mean.l_cen) << ',' << fmt_real(mean.total) << ','
        << (do_psnr ? fmt_real(psnr_value) : "") << '\n';
    csv.flush();

    if ((epoch + 1) % cfg.checkpoint_every() == 0 || last_epoch) {
      const TrainCheckpoint ckpt{config_text, store.values(), opt.step, opt.m,
                                 opt.v,       epoch + 1,      sampler.n_f};
      save_checkpoint(numbered_checkpoint_path(out_dir, epoch + 1), ckpt);
      save_checkpoint(paths.checkpoint, ckpt);
    }

    if (epoch % 10 == 0 || last_epoch) {
      log << "epoch " << epoch << "/" << cfg.epochs() << " lr " << fmt_real(lr_epoch)
          << " total " << fmt_real(mean.total);
      if (do_psnr) log << " psnr " << fmt_real(psnr_value);
      log << "\n";
    }
    result.last = mean;
  }
  result.epochs_completed = cfg.epochs();
  return result;
}

}  // namespace vfield
