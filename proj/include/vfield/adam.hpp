#pragma once

#include <cstdint>

#include "vfield/param_store.hpp"
#include "vfield/types.hpp"

namespace vfield {

/// Adaptive-moment optimizer state. The moment accumulators always match the
/// parameter vector length; `step` counts completed updates (drives bias
/// correction, not the learning-rate schedule — that follows the epoch).
struct OptimizerState {
  std::int64_t step = 0;
  Vec m{0};  ///< first-moment accumulator
  Vec v{0};  ///< second-moment accumulator
  Real base_lr = 5e-4;
  Real decay_rate = 0.1;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;

  void init(Eigen::Index n) {
    step = 0;
    m = Vec::Zero(n);
    v = Vec::Zero(n);
  }
};

/// lr(epoch) = base_lr * decay_rate^(epoch / total_epochs); epoch 0 gives
/// base_lr, the final epoch gives base_lr * decay_rate.
Real decayed_lr(Real base_lr, Real decay_rate, int epoch, int total_epochs);

/// One Adam update at learning rate `lr` using the gradients accumulated in
/// `params`; zeroes the gradients afterwards. A non-finite gradient rejects
/// the whole step (parameters untouched) and throws, naming the first bad
/// index, so the trainer can abort while the last good checkpoint survives.
void optimizer_step(OptimizerState& opt, ParamStore& params, Real lr);

}  // namespace vfield
