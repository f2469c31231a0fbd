#include "vfield/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace vfield {

Real decayed_lr(Real base_lr, Real decay_rate, int epoch, int total_epochs) {
  if (total_epochs <= 0) throw std::runtime_error("decayed_lr: total_epochs must be positive");
  return base_lr * std::pow(decay_rate, static_cast<Real>(epoch) / total_epochs);
}

void optimizer_step(OptimizerState& opt, ParamStore& params, Real lr) {
  const Vec& g = params.grads();
  if (opt.m.size() != g.size() || opt.v.size() != g.size()) {
    throw std::runtime_error("optimizer_step: state size does not match parameter count");
  }
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw std::runtime_error("optimizer_step: non-finite gradient at parameter index " +
                               std::to_string(i) + "; step rejected");
    }
  }
  opt.step += 1;
  opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * g;
  opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * g.cwiseProduct(g);
  const Real m_correction = 1.0 - std::pow(opt.beta1, static_cast<Real>(opt.step));
  const Real v_correction = 1.0 - std::pow(opt.beta2, static_cast<Real>(opt.step));
  params.values() -=
      (lr / m_correction) * opt.m.cwiseQuotient(
                                ((opt.v / v_correction).cwiseSqrt().array() + opt.epsilon).matrix());
  params.zero_grads();
}

}  // namespace vfield
