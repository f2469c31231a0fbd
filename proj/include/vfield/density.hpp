#pragma once

#include <cmath>

#include "vfield/tape.hpp"
#include "vfield/types.hpp"

namespace vfield {

/// Sliding-window weights for the averaged cosine similarity. Indices
/// 0..M/2-1 weight backward neighbors (index j pairs sample i with i-j-1);
/// indices M/2..M-1 weight forward neighbors (index M/2+j pairs i with i+j+1).
struct WindowWeights {
  int m = 6;         ///< even window size
  int n = 0;         ///< annealing clock value the weights were built with
  int n_epochs = 1;  ///< annealing duration
  Vec w;             ///< M weights, nonnegative, sum 1
};

/// Annealing clock: 0 before anneal_start, grows linearly, saturates at
/// anneal_end - anneal_start (the duration doubles as N_epochs).
int anneal_clock(int epoch, int anneal_start, int anneal_end);

/// w_hat_i = (M/2) * ReLU(1 - n*|i - M/2| / n_epochs), L1-normalized.
/// n = 0 gives the uniform window; n = n_epochs the one-hot window at index
/// M/2 (the immediate successor along the ray).
WindowWeights anneal_weights(int m, int n, int n_epochs);

/// Weight of the neighbor at signed offset `o` (o in -M/2..-1, 1..M/2) for
/// similarity index i on a ray of n_points samples, renormalized over the
/// offsets whose neighbor index stays inside [0, n_points-1]. Zero when the
/// neighbor falls off the ray.
Real boundary_weight(const WindowWeights& w, int i, int o, int n_points);

/// Learnable density-transform parameters. alpha and beta live in log-space
/// so unconstrained optimizer steps cannot violate positivity; xi is a fixed
/// hyperparameter.
struct DensityParams {
  Real log_alpha = std::log(100.0);
  Real mu = 0.7;
  Real log_beta = std::log(0.5);
  Real xi = -0.5;
  Real alpha() const { return std::exp(log_alpha); }
  Real beta() const { return std::exp(log_beta); }
};

/// Standard Laplace CDF (continuous and monotone, unlike the printed
/// two-branch form without the 1/2 factors, which is discontinuous at mu and
/// therefore cannot be a CDF): x <= mu -> 0.5*exp((x-mu)/beta), else
/// 1 - 0.5*exp(-(x-mu)/beta).
Real laplace_cdf(Real x, Real mu, Real beta);

/// Weighted-average cosine similarities along one ray. `v` holds one VF
/// prediction per column (3 x (N+1)); returns N values (the last sample has
/// no successor). Near-zero-norm vectors contribute cosine 0 via the
/// kNormFloor denominator floor; `had_degenerate` (optional) reports whether
/// any appeared.
RowVec windowed_cosine(const Mat& v, const WindowWeights& w, bool* had_degenerate = nullptr);

/// Traced twin of windowed_cosine: v is a 3 x (N+1) node, result is 1 x N.
NodeId windowed_cosine(Tape& tape, NodeId v, const WindowWeights& w);

/// sigma_i = ReLU(alpha * Psi(-c_sim_i) - alpha * Psi(xi)).
RowVec density(const RowVec& c_sim, const DensityParams& p);

/// 1x1 nodes for the learnable density parameters, mapped out of log-space.
struct DensityNodes {
  NodeId alpha;
  NodeId mu;
  NodeId beta;
};

/// Pulls density/log_alpha, density/mu, density/log_beta from the tape's
/// ParamStore and applies exp to the log-space entries.
DensityNodes trace_density_params(Tape& tape);

/// Traced twin of density(); c_sim is 1 x N.
NodeId density(Tape& tape, NodeId c_sim, const DensityNodes& p, Real xi);

}  // namespace vfield
