#pragma once

#include <string>
#include <vector>

#include "vfield/rng.hpp"
#include "vfield/tape.hpp"
#include "vfield/types.hpp"

namespace vfield {

/// Per-column encoding [x, sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^{L-1} pi x),
/// cos(2^{L-1} pi x)]: k rows of raw input followed by L sin/cos row groups.
/// L = 0 returns the input unchanged.
Mat positional_encoding(const Mat& x, int frequencies);
NodeId positional_encoding(Tape& tape, NodeId x, int frequencies);
int positional_encoding_dim(int input_dim, int frequencies);

struct MlpConfig {
  int input_dim = 3;      ///< rows of the (already encoded) first-layer input
  int hidden_width = 256;
  int hidden_layers = 8;  ///< count of ReLU hidden layers; output layer is linear
  int output_dim = 3;
  /// Encoding frequencies per input group, kept here so checkpoints echo the
  /// full architecture; the owning network applies the encoding.
  std::vector<int> pe_frequencies;
  /// 1-based hidden layers whose input is augmented with the encoded network
  /// input (valid indices 2..hidden_layers).
  std::vector<int> skip_connections;
};

/// Plain fully connected stack: hidden layers ReLU, output layer linear.
/// Parameters live in a ParamStore under "<prefix>/W<k>", "<prefix>/b<k>"
/// (k = 1..hidden_layers) and "<prefix>/Wout", "<prefix>/bout".
class Mlp {
 public:
  Mlp(MlpConfig config, std::string prefix);

  void register_params(ParamStore& store) const;
  /// He-style uniform weights (limit sqrt(6/fan_in)), zero biases; consumes
  /// the Rng in segment-registration order so initialization is reproducible.
  void init_params(ParamStore& store, Rng& rng) const;

  /// Batched forward: encoded input (input_dim x B) -> (output_dim x B).
  Mat forward(const ParamStore& store, const Mat& encoded) const;
  NodeId forward(Tape& tape, NodeId encoded) const;

  const MlpConfig& config() const { return config_; }
  const std::string& prefix() const { return prefix_; }

 private:
  bool has_skip(int layer) const;
  int layer_input_dim(int layer) const;
  std::string weight_name(int layer) const;  // layer hidden_layers+1 = output
  std::string bias_name(int layer) const;

  MlpConfig config_;
  std::string prefix_;
};

/// VF network: x -> (v, z). v is the unnormalized field prediction; z is a
/// geometry feature passed to the color network.
class VfNetwork {
 public:
  VfNetwork(int hidden_width, int hidden_layers, int feature_dim, int pe_x, bool skip);

  void register_params(ParamStore& store) const { mlp_.register_params(store); }
  void init_params(ParamStore& store, Rng& rng) const { mlp_.init_params(store, rng); }

  struct Output {
    Mat v;  ///< 3 x B
    Mat z;  ///< feature_dim x B
  };
  Output forward(const ParamStore& store, const Mat& x) const;

  struct TracedOutput {
    NodeId v;
    NodeId z;
  };
  TracedOutput forward(Tape& tape, NodeId x) const;

  int feature_dim() const { return feature_dim_; }
  int pe_x() const { return pe_x_; }
  const Mlp& mlp() const { return mlp_; }

 private:
  static MlpConfig make_config(int width, int layers, int feature_dim, int pe_x, bool skip);
  Mlp mlp_;
  int feature_dim_;
  int pe_x_;
};

/// Color network: (x, v, d, z) -> rgb in (0,1)^3 via a logistic output layer.
/// The viewing direction d is positionally encoded; x is passed raw by
/// default (encoding it too is configurable).
class ColorNetwork {
 public:
  ColorNetwork(int hidden_width, int hidden_layers, int feature_dim, int pe_d, bool encode_x,
               int pe_x);

  void register_params(ParamStore& store) const { mlp_.register_params(store); }
  void init_params(ParamStore& store, Rng& rng) const { mlp_.init_params(store, rng); }

  /// All inputs are per-column batches: x, v, d are 3 x B; z is feature_dim x B.
  Mat forward(const ParamStore& store, const Mat& x, const Mat& v, const Mat& d,
              const Mat& z) const;
  NodeId forward(Tape& tape, NodeId x, NodeId v, NodeId d, NodeId z) const;

  const Mlp& mlp() const { return mlp_; }

 private:
  static MlpConfig make_config(int width, int layers, int feature_dim, int pe_d, bool encode_x,
                               int pe_x);
  Mlp mlp_;
  int pe_d_;
  bool encode_x_;
  int pe_x_;
};

/// Architecture plus density-transform hyperparameters; everything needed to
/// rebuild an identical parameter layout from a checkpoint.
struct ModelConfig {
  int vf_hidden_width = 256;
  int vf_hidden_layers = 8;
  int feature_dim = 256;
  int pe_x = 6;
  bool vf_skip = true;  ///< skip connection into hidden layer 4 (when depth allows)
  int color_hidden_width = 256;
  int color_hidden_layers = 4;
  int pe_d = 4;
  bool color_pe_x = false;
  Real xi = -0.5;      ///< fixed cosine threshold (not learnable)
  Real mu0 = 0.7;      ///< initial mu
  Real beta0 = 0.5;    ///< initial beta (stored as log_beta)
  Real alpha0 = 100.0; ///< initial alpha (stored as log_alpha)
};

/// Both networks plus the learnable density parameters, registered in a fixed
/// order: vf/*, color/*, density/log_alpha, density/mu, density/log_beta.
/// alpha and beta are optimized in log-space so positivity cannot be lost.
class VfModel {
 public:
  explicit VfModel(const ModelConfig& config);

  void register_params(ParamStore& store) const;
  void initialize(ParamStore& store, std::uint64_t seed) const;

  const VfNetwork& vf() const { return vf_; }
  const ColorNetwork& color() const { return color_; }
  const ModelConfig& config() const { return config_; }

  static Real alpha(const ParamStore& store);
  static Real mu(const ParamStore& store);
  static Real beta(const ParamStore& store);

 private:
  ModelConfig config_;
  VfNetwork vf_;
  ColorNetwork color_;
};

}  // namespace vfield
