#include "vfield/density.hpp"

#include <algorithm>
#include <stdexcept>

namespace vfield {
namespace {

/// Window index for a signed neighbor offset: o = -(j+1) -> j, o = +(j+1) ->
/// M/2 + j (the layout fixed by the similarity definition).
int weight_index(int m, int o) { return o < 0 ? (-o - 1) : (m / 2 + o - 1); }

void check_window(const WindowWeights& w) {
  if (w.m < 2 || w.m % 2 != 0) throw std::runtime_error("WindowWeights: M must be even and >= 2");
  if (w.w.size() != w.m) throw std::runtime_error("WindowWeights: weight count != M");
}

}  // namespace

int anneal_clock(int epoch, int anneal_start, int anneal_end) {
  if (anneal_start >= anneal_end) {
    throw std::runtime_error("anneal_clock: anneal_start must be < anneal_end");
  }
  return std::clamp(epoch - anneal_start, 0, anneal_end - anneal_start);
}

WindowWeights anneal_weights(int m, int n, int n_epochs) {
  if (m < 2 || m % 2 != 0) throw std::runtime_error("anneal_weights: M must be even and >= 2");
  if (n_epochs < 1) throw std::runtime_error("anneal_weights: n_epochs must be >= 1");
  if (n < 0 || n > n_epochs) throw std::runtime_error("anneal_weights: n outside [0, n_epochs]");
  WindowWeights out;
  out.m = m;
  out.n = n;
  out.n_epochs = n_epochs;
  out.w = Vec(m);
  const Real half = m / 2;
  for (int i = 0; i < m; ++i) {
    const Real x = 1.0 - static_cast<Real>(n) * std::abs(i - m / 2) / n_epochs;
    out.w[i] = half * std::max(x, 0.0);
  }
  out.w /= out.w.sum();  // w[M/2] = M/2 always, so the sum is positive
  return out;
}

Real boundary_weight(const WindowWeights& w, int i, int o, int n_points) {
  check_window(w);
  const int half = w.m / 2;
  if (o == 0 || o < -half || o > half) {
    throw std::runtime_error("boundary_weight: offset outside window");
  }
  auto in_range = [&](int offset) {
    const int k = i + offset;
    return k >= 0 && k < n_points;
  };
  if (!in_range(o)) return 0.0;
  Real valid_sum = 0;
  for (int offset = -half; offset <= half; ++offset) {
    if (offset == 0) continue;
    if (in_range(offset)) valid_sum += w.w[weight_index(w.m, offset)];
  }
  return w.w[weight_index(w.m, o)] / valid_sum;
}

Real laplace_cdf(Real x, Real mu, Real beta) {
  if (!(beta > 0)) throw std::runtime_error("laplace_cdf: beta must be positive");
  const Real d = x - mu;
  return d <= 0 ? 0.5 * std::exp(d / beta) : 1.0 - 0.5 * std::exp(-d / beta);
}

RowVec windowed_cosine(const Mat& v, const WindowWeights& w, bool* had_degenerate) {
  check_window(w);
  if (v.rows() != 3 || v.cols() < 2) {
    throw std::runtime_error("windowed_cosine: v must be 3 x (N+1) with N >= 1");
  }
  const int n_points = static_cast<int>(v.cols());
  const int n_sim = n_points - 1;
  const int half = w.m / 2;
  bool degenerate = false;
  auto cosine = [&](int a, int b) {
    const Real na = v.col(a).norm();
    const Real nb = v.col(b).norm();
    if (na <= kNormFloor || nb <= kNormFloor) degenerate = true;
    return v.col(a).dot(v.col(b)) / (std::max(na, kNormFloor) * std::max(nb, kNormFloor));
  };
  RowVec out(n_sim);
  out.setZero();
  // Accumulate per offset in ascending order with pre-divided weights — the
  // same association the traced twin uses, so the two agree to the last bit.
  for (int o = -half; o <= half; ++o) {
    if (o == 0) continue;
    for (int i = 0; i < n_sim; ++i) {
      const int k = i + o;
      if (k < 0 || k >= n_points) continue;
      const Real weight = boundary_weight(w, i, o, n_points);
      if (weight == 0.0) continue;
      out[i] += weight * cosine(i, k);
    }
  }
  if (had_degenerate != nullptr) *had_degenerate = degenerate;
  return out;
}

NodeId windowed_cosine(Tape& tape, NodeId v, const WindowWeights& w) {
  check_window(w);
  const Mat& value = tape.value(v);
  if (value.rows() != 3 || value.cols() < 2) {
    throw std::runtime_error("windowed_cosine: v must be 3 x (N+1) with N >= 1");
  }
  const int n_points = static_cast<int>(value.cols());
  const int n_sim = n_points - 1;
  const int half = w.m / 2;
  NodeId acc = tape.constant(Mat::Zero(1, n_sim));
  for (int o = -half; o <= half; ++o) {
    if (o == 0) continue;
    const int i0 = std::max(0, -o);
    const int i1 = std::min(n_sim - 1, n_points - 1 - o);
    if (i0 > i1) continue;
    const int len = i1 - i0 + 1;
    Mat weights(1, len);
    bool all_zero = true;
    std::vector<Eigen::Index> destinations(len);
    for (int i = i0; i <= i1; ++i) {
      weights(0, i - i0) = boundary_weight(w, i, o, n_points);
      destinations[i - i0] = i;
      if (weights(0, i - i0) != 0.0) all_zero = false;
    }
    if (all_zero) continue;  // annealed-away offsets add nothing
    const NodeId cosr = tape.cosine_cols(tape.cols(v, i0, len), tape.cols(v, i0 + o, len));
    const NodeId term = tape.cmul(cosr, tape.constant(std::move(weights)));
    acc = tape.add(acc, tape.scatter_cols(term, destinations, n_sim));
  }
  return acc;
}

RowVec density(const RowVec& c_sim, const DensityParams& p) {
  const Real alpha = p.alpha();
  const Real beta = p.beta();
  const Real threshold = laplace_cdf(p.xi, p.mu, beta) * alpha;
  RowVec out(c_sim.size());
  for (Eigen::Index i = 0; i < c_sim.size(); ++i) {
    out[i] = std::max(laplace_cdf(-c_sim[i], p.mu, beta) * alpha - threshold, 0.0);
  }
  return out;
}

DensityNodes trace_density_params(Tape& tape) {
  DensityNodes nodes;
  nodes.alpha = tape.exp_of(tape.param("density/log_alpha"));
  nodes.mu = tape.param("density/mu");
  nodes.beta = tape.exp_of(tape.param("density/log_beta"));
  return nodes;
}

NodeId density(Tape& tape, NodeId c_sim, const DensityNodes& p, Real xi) {
  const NodeId psi_neg = tape.laplace_cdf(tape.scale(c_sim, -1.0), p.mu, p.beta);
  const NodeId xi_node = tape.constant(Mat::Constant(1, 1, xi));
  const NodeId psi_xi = tape.laplace_cdf(xi_node, p.mu, p.beta);
  const NodeId scaled = tape.mul_scalar_node(psi_neg, p.alpha);
  const NodeId threshold = tape.mul_scalar_node(psi_xi, p.alpha);
  return tape.relu(tape.sub_scalar_node(scaled, threshold));
}

}  // namespace vfield
