#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vfield/dataset.hpp"
#include "vfield/losses.hpp"
#include "vfield/mlp.hpp"
#include "vfield/trainconfig.hpp"

namespace vfield {

/// One training pixel: a (view, row, col) address into the dataset.
struct PixelSample {
  int view = 0;
  int row = 0;
  int col = 0;
};

/// `count` pixels drawn uniformly over the views' (pixel) population without
/// replacement, in draw order. Views listed in `views` only (empty = all).
/// Deterministic for a given rng state.
std::vector<PixelSample> sample_pixel_batch(const Dataset& dataset, int count, Rng& rng,
                                            const std::vector<int>& views = {});

/// Outcome of field pretraining toward the scene center.
struct PretrainResult {
  int steps = 0;
  Real holdout_cosine = 0;  ///< mean cosine between field and target on held-out points
};

/// Initializes the field network to point at c_scene: minimizes the mean
/// squared error to the inward radial field over points uniform in the scene
/// bounds, then scores the mean cosine alignment on a held-out point set.
/// Throws (with the measured value) below 0.9; the caller decides how to
/// surface values between 0.9 and the 0.99 target. Only field-network
/// parameters receive updates; the optimizer state is local and discarded.
PretrainResult pretrain_to_center(ParamStore& store, const VfModel& model, const Scene& scene,
                                  int steps, int batch, Real lr, std::uint64_t seed);

/// Paths produced by a training run, all inside out_dir.
struct TrainPaths {
  std::string checkpoint;
  std::string metrics;
  std::string resolved_config;
};
TrainPaths train_paths(const std::string& out_dir);

struct TrainResult {
  int epochs_completed = 0;
  BatchLosses last;          ///< mean components of the final epoch
  Real last_psnr = 0;        ///< final holdout PSNR (0 when no holdout view)
  PretrainResult pretrain;   ///< steps = 0 when pretraining was skipped
};

/// Runs the full optimization: pretraining (fresh runs only), per-epoch
/// annealing/fine-count/learning-rate schedules, pixel batches with the
/// five-term loss, periodic atomic checkpoints, and a metrics CSV with header
/// `epoch,lr,L_c,L_depth,L_norm,L_ext,L_cen,total,psnr_holdout`.
///
/// `resume` loads out_dir's checkpoint and continues at its epoch; the
/// checkpoint's embedded config must match cfg.to_text() exactly (bit
/// determinism is only meaningful under the identical configuration).
/// A non-finite loss or gradient aborts with the last on-disk checkpoint
/// intact. Single-threaded: two runs with equal configs produce byte-equal
/// checkpoints and CSVs.
TrainResult train(const Dataset& dataset, const Scene& scene, const TrainConfig& cfg,
                  const std::string& out_dir, bool resume, std::ostream& log);

}  // namespace vfield
