// The `vfield` command line: dataset generation, training, rendering,
// evaluation, and the oracle self-check suite, under one exit-code policy
// (0 success, 2 usage problems, 1 runtime failures).

#include "vfield/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vfield/checkpoint.hpp"
#include "vfield/dataset.hpp"
#include "vfield/density.hpp"
#include "vfield/geometry.hpp"
#include "vfield/losses.hpp"
#include "vfield/metrics.hpp"
#include "vfield/mlp.hpp"
#include "vfield/pointcloud.hpp"
#include "vfield/renderer.hpp"
#include "vfield/rng.hpp"
#include "vfield/sceneio.hpp"
#include "vfield/textio.hpp"
#include "vfield/trainconfig.hpp"
#include "vfield/trainer.hpp"

namespace vfield {
namespace {

// Errors of the "fix your invocation" kind: unknown flags or keys, missing
// input files, invalid configurations. Mapped to exit code 2; everything else
// thrown below is a runtime failure and maps to 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// rng domain tags for the self-check suite (ASCII mnemonics).
constexpr std::uint64_t kSaltCheckNorm = 0x6b6e726d;    // "knrm"
constexpr std::uint64_t kSaltCheckProbe = 0x6b707262;   // "kprb"
constexpr std::uint64_t kSaltCheckCosine = 0x6b636f73;  // "kcos"
constexpr std::uint64_t kSaltCheckGrad = 0x6b677264;    // "kgrd"

void require_input_file(const std::string& path, const std::string& what) {
  if (!std::filesystem::exists(path)) throw UsageError(what + " not found: " + path);
}

// Accepts either a manifest file or a dataset directory containing one.
std::string resolve_dataset_manifest(const std::string& path) {
  std::filesystem::path p(path);
  if (std::filesystem::is_directory(p)) p = manifest_path_for(path);
  if (!std::filesystem::exists(p))
    throw UsageError("dataset manifest not found: " + p.string());
  return p.string();
}

// Layers defaults -> config file -> --set overrides -> dedicated flags, and
// validates. All configuration problems are usage errors.
TrainConfig build_config(const std::string& config_file, const std::vector<std::string>& sets,
                         const std::uint64_t* seed, const int* threads) {
  TrainConfig cfg;
  try {
    if (!config_file.empty()) cfg.apply_file(config_file);
    cfg.apply_overrides(sets, "--set");
    if (seed != nullptr) cfg.apply_overrides({"seed=" + std::to_string(*seed)}, "--seed");
    if (threads != nullptr)
      cfg.apply_overrides({"threads=" + std::to_string(*threads)}, "--threads");
    cfg.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

// Verbatim help appendix: one line per configuration key, straight from the
// registry so the help can never drift from the accepted keys.
std::string config_key_footer() {
  std::ostringstream o;
  o << "Configuration keys (usable in --config files and --set overrides):\n";
  for (const ConfigKeySpec& spec : config_registry())
    o << "  " << spec.name << " (default " << spec.default_value << "): " << spec.doc << "\n";
  return o.str();
}

Mat uniform_points(const Vec3& lo, const Vec3& hi, int count, Rng& rng) {
  Mat x(3, count);
  for (int i = 0; i < count; ++i)
    for (int a = 0; a < 3; ++a) x(a, i) = rng.uniform(lo[a], hi[a]);
  return x;
}

// Field/color closures evaluating the analytic oracle of a scene.
FieldFn oracle_field(const Scene& scene) {
  return [&scene](const Mat& x) {
    FieldBatch fb;
    fb.v = oracle_vf_batch(scene, Mat3X(x));
    fb.z = Mat(0, x.cols());
    return fb;
  };
}

RayColorFn oracle_color_fn(const Scene& scene) {
  return [&scene](const Mat& x, const Mat&, const Vec3&, const Mat&) {
    Mat rgb(3, x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) rgb.col(i) = oracle_color(scene, x.col(i));
    return rgb;
  };
}

DensityParams density_from_store(const ParamStore& store, Real xi) {
  DensityParams dp;
  dp.log_alpha = store.scalar("density/log_alpha");
  dp.mu = store.scalar("density/mu");
  dp.log_beta = store.scalar("density/log_beta");
  dp.xi = xi;
  return dp;
}

// ---------------------------------------------------------------------------
// gen

struct GenOptions {
  std::string scene;
  std::string cams;
  std::string out_dir;
};

int run_gen(const GenOptions& opt, std::ostream& out) {
  require_input_file(opt.scene, "scene file");
  require_input_file(opt.cams, "camera file");
  const Scene scene = load_scene(opt.scene);
  const std::vector<Camera> cameras = load_cameras(opt.cams);
  const Dataset dataset = render_dataset(scene, cameras);
  save_dataset(opt.out_dir, dataset);
  out << "wrote " << dataset.views.size() << " views (" << dataset.views.front().camera.width
      << "x" << dataset.views.front().camera.height << ") to " << opt.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string data;
  std::string scene;
  std::string out_dir;
  std::string config_file;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  bool threads_given = false;
  bool resume = false;
};

int run_train(const TrainOptions& opt, std::ostream& out) {
  if (!opt.config_file.empty()) require_input_file(opt.config_file, "config file");
  require_input_file(opt.scene, "scene file");
  const TrainConfig cfg =
      build_config(opt.config_file, opt.sets, opt.seed_given ? &opt.seed : nullptr,
                   opt.threads_given ? &opt.threads : nullptr);
  const Dataset dataset = load_dataset(resolve_dataset_manifest(opt.data));
  const Scene scene = load_scene(opt.scene);
  const TrainResult result = train(dataset, scene, cfg, opt.out_dir, opt.resume, out);
  const TrainPaths paths = train_paths(opt.out_dir);
  out << "training finished: " << result.epochs_completed << " epochs, final loss "
      << result.last.total << ", checkpoint " << paths.checkpoint << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// render

struct RenderOptions {
  std::string scene;
  std::string cams;
  std::string out_dir;
  std::string checkpoint;
  bool oracle_vf = false;
  std::vector<std::string> sets;
};

int run_render(const RenderOptions& opt, std::ostream& out) {
  if (opt.oracle_vf == !opt.checkpoint.empty())
    throw UsageError("render needs exactly one of --checkpoint or --oracle-vf");
  require_input_file(opt.scene, "scene file");
  require_input_file(opt.cams, "camera file");
  const Scene scene = load_scene(opt.scene);
  const std::vector<Camera> cameras = load_cameras(opt.cams);

  // Closures reference these; both outlive the render loop.
  std::optional<VfModel> model;
  ParamStore store;

  FieldFn field;
  RayColorFn color;
  SamplerConfig sampler;
  WindowWeights window;
  DensityParams dp;

  if (opt.oracle_vf) {
    // Analytic field, fully annealed window, density straight from the
    // configured initial constants (alpha0 and friends honour --set).
    const TrainConfig cfg = build_config("", opt.sets, nullptr, nullptr);
    sampler = cfg.sampler();
    sampler.n_f = sampler.n_f_max;
    window = anneal_weights(cfg.window_m(), 1, 1);
    dp.log_alpha = std::log(cfg.get_real("alpha0"));
    dp.mu = cfg.get_real("mu0");
    dp.log_beta = std::log(cfg.get_real("beta0"));
    dp.xi = cfg.get_real("xi");
    field = oracle_field(scene);
    color = oracle_color_fn(scene);
  } else {
    require_input_file(opt.checkpoint, "checkpoint");
    const TrainCheckpoint ckpt = load_checkpoint(opt.checkpoint);
    TrainConfig cfg;
    cfg.apply_text(ckpt.config_text, "checkpoint config");
    try {
      cfg.apply_overrides(opt.sets, "--set");
      cfg.validate();
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    model.emplace(cfg.model());
    model->register_params(store);
    if (store.values().size() != ckpt.params.size())
      throw std::runtime_error(
          "checkpoint holds " + std::to_string(ckpt.params.size()) +
          " parameters but the configured model has " + std::to_string(store.values().size()) +
          "; architecture keys must match the training run");
    store.values() = ckpt.params;
    sampler = cfg.sampler();
    sampler.n_f = ckpt.n_f;
    const int clock = anneal_clock(ckpt.epoch, cfg.anneal_start(), cfg.anneal_end());
    window =
        anneal_weights(cfg.window_m(), clock, cfg.anneal_end() - cfg.anneal_start());
    dp = density_from_store(store, cfg.get_real("xi"));
    field = [&](const Mat& x) {
      VfNetwork::Output o = model->vf().forward(store, x);
      return FieldBatch{std::move(o.v), std::move(o.z)};
    };
    color = [&](const Mat& x, const Mat& v, const Vec3& d, const Mat& z) {
      return model->color().forward(store, x, v, Mat(d.replicate(1, x.cols())), z);
    };
  }

  Dataset rendered;
  rendered.views.reserve(cameras.size());
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    FrameResult frame =
        render_frame(cameras[i], scene.near, scene.far, sampler, window, dp, field, color);
    rendered.views.push_back(
        DatasetView{cameras[i], std::move(frame.image), std::move(frame.depth)});
    out << "rendered view " << (i + 1) << "/" << cameras.size() << " (" << cameras[i].width
        << "x" << cameras[i].height << ")\n";
  }
  save_dataset(opt.out_dir, rendered);
  out << "wrote " << rendered.views.size() << " views to " << opt.out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string pred;
  std::string ref_data;
  std::string ref_scene;
  std::string out_file;
  Real threshold = 0.05;
  int surface_samples = 100000;
  Real voxel = 0.0;
  Real max_depth = std::numeric_limits<Real>::infinity();
  std::uint64_t seed = 1;
};

// PSNR with the squared error pooled over all views (equivalent to scoring
// the concatenation of the frames); +inf only when every pixel matches.
Real pooled_psnr(const Dataset& pred, const Dataset& ref) {
  Real sq = 0;
  Real pixels = 0;
  for (std::size_t i = 0; i < pred.views.size(); ++i) {
    const Image& a = pred.views[i].image;
    const Image& b = ref.views[i].image;
    if (a.width != b.width || a.height != b.height)
      throw std::runtime_error("view " + std::to_string(i) + ": image dimensions differ (" +
                               std::to_string(a.width) + "x" + std::to_string(a.height) +
                               " vs " + std::to_string(b.width) + "x" +
                               std::to_string(b.height) + ")");
    sq += (a.rgb - b.rgb).squaredNorm();
    pixels += static_cast<Real>(a.rgb.cols());
  }
  if (pixels == 0) throw std::runtime_error("eval: no pixels to compare");
  if (sq == 0) return std::numeric_limits<Real>::infinity();
  return -10.0 * std::log10(sq / pixels);
}

std::vector<DepthMap> dataset_depths(const Dataset& ds) {
  std::vector<DepthMap> out;
  out.reserve(ds.views.size());
  for (const DatasetView& v : ds.views) out.push_back(v.depth);
  return out;
}

std::vector<Camera> dataset_cameras(const Dataset& ds) {
  std::vector<Camera> out;
  out.reserve(ds.views.size());
  for (const DatasetView& v : ds.views) out.push_back(v.camera);
  return out;
}

int run_eval(const EvalOptions& opt, std::ostream& out) {
  if (opt.ref_data.empty() == opt.ref_scene.empty())
    throw UsageError("eval needs exactly one of --ref-data or --ref-scene");
  const Dataset pred = load_dataset(resolve_dataset_manifest(opt.pred));

  MetricReport report;
  report.threshold = opt.threshold;
  PointCloud pred_cloud;
  PointCloud ref_cloud;

  if (!opt.ref_data.empty()) {
    const Dataset ref = load_dataset(resolve_dataset_manifest(opt.ref_data));
    if (pred.views.size() != ref.views.size())
      throw std::runtime_error("view counts differ: predicted " +
                               std::to_string(pred.views.size()) + " vs reference " +
                               std::to_string(ref.views.size()));
    report.psnr_db = pooled_psnr(pred, ref);
    pred_cloud =
        fuse_depth_maps(dataset_depths(pred), dataset_cameras(pred), 0.0, opt.max_depth, opt.voxel);
    ref_cloud =
        fuse_depth_maps(dataset_depths(ref), dataset_cameras(ref), 0.0, opt.max_depth, opt.voxel);
  } else {
    // Geometry-only reference: no images to score, so PSNR is reported as nan.
    require_input_file(opt.ref_scene, "scene file");
    const Scene scene = load_scene(opt.ref_scene);
    report.psnr_db = std::numeric_limits<Real>::quiet_NaN();
    const Real miss_cutoff = scene.far * (1.0 - 1e-6);
    pred_cloud = clip_to_bounds(fuse_depth_maps(dataset_depths(pred), dataset_cameras(pred),
                                                scene.near, miss_cutoff, opt.voxel),
                                scene.bounds_min, scene.bounds_max);
    ref_cloud = sample_scene_surface(scene, opt.surface_samples, opt.seed);
  }

  report.chamfer = chamfer_distance(pred_cloud, ref_cloud);
  report.prf = precision_recall_f1(pred_cloud, ref_cloud, opt.threshold);

  out << format_metric_report(report);
  write_text_file_atomic(opt.out_file,
                         metric_report_csv_header() + "\n" + metric_report_csv_row(report) + "\n");
  out << "wrote " << opt.out_file << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// oracle-check

struct CheckOutcome {
  std::string name;
  int status = 0;  // 0 pass, 1 fail, 2 skip
  std::string detail;
};

const char* status_word(int s) { return s == 0 ? "PASS" : (s == 1 ? "FAIL" : "SKIP"); }

std::string fmt(Real v) {
  std::ostringstream o;
  o << v;
  return o.str();
}

// Straightforward re-evaluation of the windowed cosine definition: walk every
// signed offset, renormalize in-range weights. Independent of the production
// loop (which splits the window into shifted segment products).
RowVec reference_windowed_cosine(const Mat& v, const WindowWeights& w) {
  const int n_points = static_cast<int>(v.cols());
  const int half = w.m / 2;
  RowVec out(n_points - 1);
  for (int i = 0; i < n_points - 1; ++i) {
    Real in_range = 0;
    Real acc = 0;
    for (int o = -half; o <= half; ++o) {
      if (o == 0 || i + o < 0 || i + o >= n_points) continue;
      in_range += w.w[o < 0 ? -o - 1 : half + o - 1];
    }
    for (int o = -half; o <= half; ++o) {
      if (o == 0 || i + o < 0 || i + o >= n_points) continue;
      const Real weight = w.w[o < 0 ? -o - 1 : half + o - 1] / in_range;
      acc += weight * v.col(i).dot(v.col(i + o));
    }
    out[i] = acc;
  }
  return out;
}

CheckOutcome check_field_unit_norm(const Scene& scene, std::uint64_t seed) {
  Rng rng(mix_seed(seed, kSaltCheckNorm));
  const Mat x = uniform_points(scene.bounds_min, scene.bounds_max, 512, rng);
  const Mat3X v = oracle_vf_batch(scene, Mat3X(x));
  const Real max_dev = (v.colwise().norm().array() - 1.0).abs().maxCoeff();
  const bool ok = max_dev <= 1e-9;
  return {"field-unit-norm",
          ok ? 0 : 1,
          "max | |f(x)| - 1 | = " + fmt(max_dev) + " over 512 points (tolerance 1e-9)"};
}

CheckOutcome check_window_normalization() {
  const int m = 6;
  const int n_epochs = 700;
  Real max_sum_dev = 0;
  for (const int n : {0, 175, 350, 525, 700}) {
    const WindowWeights w = anneal_weights(m, n, n_epochs);
    max_sum_dev = std::max(max_sum_dev, std::abs(w.w.sum() - 1.0));
  }
  const WindowWeights start = anneal_weights(m, 0, n_epochs);
  const Real uniform_dev = (start.w.array() - 1.0 / m).abs().maxCoeff();
  const WindowWeights end = anneal_weights(m, n_epochs, n_epochs);
  bool one_hot = end.w[m / 2] == 1.0;
  for (int i = 0; i < m; ++i)
    if (i != m / 2 && end.w[i] != 0.0) one_hot = false;
  const bool ok = max_sum_dev <= 1e-12 && uniform_dev <= 1e-15 && one_hot;
  return {"window-normalization",
          ok ? 0 : 1,
          "max |sum - 1| = " + fmt(max_sum_dev) + " over 5 anneal stages (tolerance 1e-12); " +
              "start uniform within " + fmt(uniform_dev) + "; end one-hot: " +
              (one_hot ? "yes" : "no")};
}

CheckOutcome check_windowed_cosine(std::uint64_t seed) {
  Rng rng(mix_seed(seed, kSaltCheckCosine));
  Real max_diff = 0;
  for (int trial = 0; trial < 64; ++trial) {
    Mat v(3, 13);
    for (int i = 0; i < 13; ++i) v.col(i) = rng.unit_vector();
    const int n = static_cast<int>(rng.below(701));
    const WindowWeights w = anneal_weights(6, n, 700);
    const RowVec got = windowed_cosine(v, w);
    const RowVec want = reference_windowed_cosine(v, w);
    max_diff = std::max(max_diff, (got - want).cwiseAbs().maxCoeff());
  }
  return {"windowed-cosine-consistency", max_diff <= 1e-12 ? 0 : 1,
          "max deviation from definition-level evaluation = " + fmt(max_diff) +
              " over 64 random windows (tolerance 1e-12)"};
}

// Density must peak only where the field direction flips: at surface
// crossings, and at medial folds where the nearest surface changes by more
// than the density threshold angle. Flip locations are found independently by
// a fine march along the ray.
CheckOutcome check_density_localization(const Scene& scene, std::uint64_t seed) {
  Rng rng(mix_seed(seed, kSaltCheckProbe));
  const Real near = scene.near;
  const Real far = scene.far;
  const int n_samples = 200;
  const Real spacing = (far - near) / n_samples;
  const int fine = 4096;
  const Real fine_step = (far - near) / fine;

  int rays = 0;
  Real worst = 0;
  for (int attempt = 0; attempt < 64 && rays < 8; ++attempt) {
    const Vec3 o = uniform_points(scene.bounds_min, scene.bounds_max, 1, rng).col(0);
    const Vec3 d = rng.unit_vector();
    const RaycastHit hit = raycast(scene, o, d);
    if (!hit.hit || hit.t < near + 3 * spacing || hit.t > far * 0.8) continue;
    ++rays;

    // Fine march: record midpoints of steps across which the oracle direction
    // turns by more than 60 degrees (the angle at which density activates).
    Mat3X fine_x(3, fine + 1);
    for (int i = 0; i <= fine; ++i) fine_x.col(i) = o + (near + fine_step * i) * d;
    const Mat3X fine_v = oracle_vf_batch(scene, fine_x);
    std::vector<Real> flips;
    for (int i = 0; i < fine; ++i)
      if (fine_v.col(i).dot(fine_v.col(i + 1)) < 0.5)
        flips.push_back(near + fine_step * (i + 0.5));
    if (flips.empty())
      return {"density-localization", 1,
              "probe ray hits at t = " + fmt(hit.t) +
                  " but the fine march found no field direction flip"};

    for (const int n : {0, 175, 350, 525, 700}) {
      const WindowWeights w = anneal_weights(6, n, 700);
      Mat3X coarse_x(3, n_samples + 1);
      for (int i = 0; i <= n_samples; ++i) coarse_x.col(i) = o + (near + spacing * i) * d;
      const RowVec c_sim = windowed_cosine(oracle_vf_batch(scene, coarse_x), w);
      const RowVec sigma = density(c_sim, DensityParams{});
      Eigen::Index peak = 0;
      const Real peak_value = sigma.maxCoeff(&peak);
      if (peak_value <= 0)
        return {"density-localization", 1,
                "no positive density along a probe ray hitting at t = " + fmt(hit.t)};
      const Real t_peak = near + spacing * static_cast<Real>(peak);
      Real dist = std::numeric_limits<Real>::infinity();
      for (const Real f : flips) dist = std::min(dist, std::abs(t_peak - f));
      worst = std::max(worst, dist);
    }
  }
  if (rays < 4)
    return {"density-localization", 1,
            "only " + std::to_string(rays) +
                " of 64 probe rays hit the scene; need at least 4 for a meaningful check"};
  const Real tol = spacing + fine_step;
  return {"density-localization", worst <= tol ? 0 : 1,
          std::to_string(rays) + " rays x 5 anneal stages: max |t_peak - t_flip| = " +
              fmt(worst) + " (tolerance " + fmt(tol) + ")"};
}

// True when the oracle direction turns by more than the density threshold
// angle (60 degrees) anywhere strictly before t_stop: such a ray deposits
// real density at a medial seam, so its rendered depth legitimately differs
// from the raycast depth.
bool crosses_seam_before(const Scene& scene, const Vec3& o, const Vec3& d, Real t_stop) {
  const int steps = 1024;
  const Real step = (t_stop - scene.near) / steps;
  if (step <= 0) return false;
  Mat3X x(3, steps + 1);
  for (int i = 0; i <= steps; ++i) x.col(i) = o + (scene.near + step * i) * d;
  const Mat3X v = oracle_vf_batch(scene, x);
  for (int i = 0; i < steps; ++i)
    if (v.col(i).dot(v.col(i + 1)) < 0.5) return true;
  return false;
}

// Renders a small frame from the scene centre toward its nearest surface with
// the oracle field, a fully annealed window, and a sharp density scale, then
// compares against per-pixel raycasts. Density also rises at medial seams
// (where the nearest surface changes by more than 60 degrees), so only rays
// with a seam-free run-up probe pure quadrature accuracy; the rest are
// reported but not scored. Median error over the eligible rays.
CheckOutcome check_depth_render(const Scene& scene) {
  const int size = 24;
  const Vec3 o = scene.c_scene;
  Vec3 aim = nearest_surface_point(scene, o).point - o;
  if (aim.norm() < 1e-9) aim = Vec3(0, 0, -1);
  const Vec3 up = std::abs(aim.normalized()[2]) > 0.99 ? Vec3(0, 1, 0) : Vec3(0, 0, 1);
  const Real focal = Camera::focal_from_hfov(45.0, size);
  const Camera cam = Camera::look_at(o, o + aim, up, focal, focal, size, size);
  SamplerConfig sampler;
  sampler.n_c = 96;
  sampler.n_f = 64;
  sampler.n_f_max = 64;
  sampler.d_samples = 0.3;
  const WindowWeights window = anneal_weights(6, 1, 1);
  DensityParams dp;
  dp.log_alpha = std::log(1e4);

  const FieldFn field = oracle_field(scene);
  const RayColorFn color = oracle_color_fn(scene);
  const FrameResult frame =
      render_frame(cam, scene.near, scene.far, sampler, window, dp, field, color);

  std::vector<Real> errors;
  Real depth_sum = 0;
  int hits = 0;
  const std::vector<Ray> rays = cam.all_rays();
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const RaycastHit hit = raycast(scene, rays[i].origin, rays[i].dir);
    if (!hit.hit) continue;
    ++hits;
    const Real guard = (hit.t - scene.near) / 512;
    if (crosses_seam_before(scene, rays[i].origin, rays[i].dir, hit.t - guard)) continue;
    errors.push_back(std::abs(frame.depth.depth[static_cast<Eigen::Index>(i)] - hit.t));
    depth_sum += hit.t;
  }
  if (errors.size() < 16 || static_cast<int>(errors.size()) < hits / 10)
    return {"depth-render-consistency", 1,
            "only " + std::to_string(errors.size()) + " of " + std::to_string(hits) +
                " hitting probe rays have a seam-free run-up; too few to assess quadrature"};
  std::nth_element(errors.begin(), errors.begin() + static_cast<ptrdiff_t>(errors.size() / 2),
                   errors.end());
  const Real median = errors[errors.size() / 2];
  const Real mean_depth = depth_sum / static_cast<Real>(errors.size());
  const Real tol = 0.01 * mean_depth;
  return {"depth-render-consistency", median <= tol ? 0 : 1,
          "median |depth - raycast| = " + fmt(median) + " m over " +
              std::to_string(errors.size()) + " seam-free rays of " + std::to_string(hits) +
              " hits (tolerance 1% of mean depth = " + fmt(tol) + " m)"};
}

// Backpropagated gradients of a composite loss through both networks versus
// central finite differences over every parameter of a small model.
CheckOutcome check_gradients(std::uint64_t seed) {
  TrainConfig cfg;
  try {
    cfg.apply_overrides({"vf_hidden_width=8", "vf_hidden_layers=2", "color_hidden_width=8",
                         "color_hidden_layers=2", "feature_dim=4", "pe_x=2", "pe_d=2",
                         "color_pe_x=false", "vf_skip=false"},
                        "oracle-check");
  } catch (const std::exception& e) {
    return {"gradient-consistency", 1, std::string("model setup failed: ") + e.what()};
  }
  const VfModel model(cfg.model());
  ParamStore store;
  model.register_params(store);
  model.initialize(store, mix_seed(seed, kSaltCheckGrad));

  Rng rng(mix_seed(seed, kSaltCheckGrad, 1));
  const int batch = 4;
  Mat x(3, batch);
  Mat target(3, batch);
  Vec3 dir = rng.unit_vector();
  for (int i = 0; i < batch; ++i) {
    x.col(i) = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()) * 0.5;
    target.col(i) = rng.unit_vector();
  }

  const auto loss_value = [&]() {
    const VfNetwork::Output f = model.vf().forward(store, x);
    const Mat rgb = model.color().forward(store, x, f.v, Mat(dir.replicate(1, batch)), f.z);
    return (f.v - target).squaredNorm() + rgb.sum();
  };

  store.zero_grads();
  {
    Tape tape(&store);
    const VfNetwork::TracedOutput f = model.vf().forward(tape, tape.constant(x));
    const NodeId diff = tape.sub(f.v, tape.constant(target));
    const NodeId rgb =
        model.color().forward(tape, tape.constant(x), f.v, tape.constant(Mat(dir.replicate(1, batch))), f.z);
    const NodeId loss = tape.add(tape.sum(tape.cmul(diff, diff)), tape.sum(rgb));
    tape.backward(loss);
  }
  const Vec analytic = store.grads();

  const Real h = 1e-6;
  Real max_err = 0;
  for (Eigen::Index k = 0; k < store.values().size(); ++k) {
    const Real saved = store.values()[k];
    store.values()[k] = saved + h;
    const Real up = loss_value();
    store.values()[k] = saved - h;
    const Real down = loss_value();
    store.values()[k] = saved;
    const Real fd = (up - down) / (2 * h);
    max_err = std::max(max_err, std::abs(analytic[k] - fd) / std::max(1.0, std::abs(fd)));
  }
  return {"gradient-consistency", max_err <= 1e-5 ? 0 : 1,
          "max relative |backprop - finite difference| = " + fmt(max_err) + " over " +
              std::to_string(store.values().size()) + " parameters (tolerance 1e-5)"};
}

struct OracleCheckOptions {
  std::string scene;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int run_oracle_check(const OracleCheckOptions& opt, std::ostream& out) {
  require_input_file(opt.scene, "scene file");

  std::vector<CheckOutcome> results;
  std::optional<Scene> scene;
  try {
    scene = load_scene(opt.scene);
    std::ostringstream d;
    d << scene->primitives.size() << " primitives, bounds [" << scene->bounds_min.transpose()
      << "] .. [" << scene->bounds_max.transpose() << "]";
    results.push_back({"scene-validity", 0, d.str()});
  } catch (const std::exception& e) {
    results.push_back({"scene-validity", 1, e.what()});
  }

  if (scene) {
    results.push_back(check_field_unit_norm(*scene, opt.seed));
  } else {
    results.push_back({"field-unit-norm", 2, "scene unavailable"});
  }
  results.push_back(check_window_normalization());
  results.push_back(check_windowed_cosine(opt.seed));
  if (scene) {
    results.push_back(check_density_localization(*scene, opt.seed));
    results.push_back(check_depth_render(*scene));
  } else {
    results.push_back({"density-localization", 2, "scene unavailable"});
    results.push_back({"depth-render-consistency", 2, "scene unavailable"});
  }
  results.push_back(check_gradients(opt.seed));

  std::ostringstream report;
  int failures = 0;
  for (const CheckOutcome& r : results) {
    report << status_word(r.status) << " " << r.name << ": " << r.detail << "\n";
    if (r.status == 1) ++failures;
  }
  report << (failures == 0 ? "all checks passed"
                           : std::to_string(failures) + " check(s) failed")
         << "\n";
  out << report.str();

  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    write_text_file_atomic((std::filesystem::path(opt.out_dir) / "report.txt").string(),
                           report.str());
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"vector-field scene representation: dataset generation, training, rendering,"
               " evaluation, and self-checks"};
  app.name("vfield");
  app.require_subcommand(1);

  GenOptions gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "raycast a scene into an RGB-D dataset");
  gen_cmd->add_option("--scene", gen.scene, "scene description file")->required();
  gen_cmd->add_option("--cams", gen.cams, "camera path file")->required();
  gen_cmd->add_option("--out", gen.out_dir, "output dataset directory (env: VFIELD_OUT_DIR)")
      ->envname("VFIELD_OUT_DIR")
      ->required();

  TrainOptions tr;
  CLI::App* train_cmd = app.add_subcommand("train", "fit the field to an RGB-D dataset");
  train_cmd->add_option("--data", tr.data, "dataset directory or manifest file")->required();
  train_cmd->add_option("--scene", tr.scene, "scene file (bounds, near/far, scene centre)")
      ->required();
  train_cmd->add_option("--out", tr.out_dir, "output directory (env: VFIELD_OUT_DIR)")
      ->envname("VFIELD_OUT_DIR")
      ->required();
  train_cmd->add_option("--config", tr.config_file, "key=value configuration file");
  train_cmd->add_option("--set", tr.sets, "configuration override KEY=VALUE (repeatable)");
  CLI::Option* seed_opt = train_cmd->add_option("--seed", tr.seed, "override the seed key");
  CLI::Option* threads_opt =
      train_cmd->add_option("--threads", tr.threads,
                            "override the threads key (this build computes serially)");
  train_cmd->add_flag("--resume", tr.resume, "continue from the checkpoint in the output dir");
  train_cmd->footer(config_key_footer());

  RenderOptions rd;
  CLI::App* render_cmd =
      app.add_subcommand("render", "render frames for a camera path into dataset format");
  render_cmd->add_option("--scene", rd.scene, "scene file (near/far; geometry for --oracle-vf)")
      ->required();
  render_cmd->add_option("--cams", rd.cams, "camera path file")->required();
  render_cmd->add_option("--out", rd.out_dir, "output dataset directory (env: VFIELD_OUT_DIR)")
      ->envname("VFIELD_OUT_DIR")
      ->required();
  render_cmd->add_option("--checkpoint", rd.checkpoint, "trained checkpoint to render");
  render_cmd->add_flag("--oracle-vf", rd.oracle_vf,
                       "render the analytic scene field instead of a checkpoint");
  render_cmd->add_option("--set", rd.sets,
                         "configuration override KEY=VALUE (see `vfield train --help`)");

  EvalOptions ev;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score a rendered dataset against a reference");
  eval_cmd->add_option("--pred", ev.pred, "predicted dataset directory or manifest")->required();
  eval_cmd->add_option("--ref-data", ev.ref_data, "reference dataset directory or manifest");
  eval_cmd->add_option("--ref-scene", ev.ref_scene, "reference scene file (geometry metrics only)");
  eval_cmd->add_option("--out", ev.out_file, "output CSV file")->required();
  eval_cmd->add_option("--threshold", ev.threshold, "F1 distance threshold in metres (default 0.05)");
  eval_cmd->add_option("--surface-samples", ev.surface_samples,
                       "surface points drawn from a --ref-scene (default 100000)");
  eval_cmd->add_option("--voxel", ev.voxel, "voxel size for cloud downsampling, 0 = off");
  eval_cmd->add_option("--max-depth", ev.max_depth,
                       "ignore depths at or beyond this in --ref-data mode (default: keep all)");
  eval_cmd->add_option("--seed", ev.seed, "seed for surface sampling (default 1)");

  OracleCheckOptions oc;
  CLI::App* check_cmd = app.add_subcommand(
      "oracle-check", "self-check the analytic oracle and the differentiation machinery");
  check_cmd->add_option("--scene", oc.scene, "scene file to probe")->required();
  check_cmd->add_option("--seed", oc.seed, "probe seed (default 1)");
  check_cmd->add_option("--out", oc.out_dir, "directory for report.txt (optional)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    tr.seed_given = seed_opt->count() > 0;
    tr.threads_given = threads_opt->count() > 0;
    if (gen_cmd->parsed()) return run_gen(gen, out);
    if (train_cmd->parsed()) return run_train(tr, out);
    if (render_cmd->parsed()) return run_render(rd, out);
    if (eval_cmd->parsed()) return run_eval(ev, out);
    if (check_cmd->parsed()) return run_oracle_check(oc, out);
    throw std::logic_error("no subcommand dispatched");
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace vfield
