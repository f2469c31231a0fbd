#include "vfield/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vfield {

int positional_encoding_dim(int input_dim, int frequencies) {
  return input_dim * (1 + 2 * frequencies);
}

Mat positional_encoding(const Mat& x, int frequencies) {
  if (frequencies < 0) throw std::runtime_error("positional_encoding: frequencies < 0");
  const Eigen::Index k = x.rows();
  Mat out(positional_encoding_dim(static_cast<int>(k), frequencies), x.cols());
  out.topRows(k) = x;
  for (int l = 0; l < frequencies; ++l) {
    const Real freq = std::ldexp(kPi, l);  // 2^l * pi
    out.middleRows(k + 2 * l * k, k) = (freq * x).array().sin().matrix();
    out.middleRows(k + (2 * l + 1) * k, k) = (freq * x).array().cos().matrix();
  }
  return out;
}

NodeId positional_encoding(Tape& tape, NodeId x, int frequencies) {
  if (frequencies < 0) throw std::runtime_error("positional_encoding: frequencies < 0");
  NodeId out = x;
  for (int l = 0; l < frequencies; ++l) {
    const NodeId scaled = tape.scale(x, std::ldexp(kPi, l));
    out = tape.vstack(out, tape.sin_of(scaled));
    out = tape.vstack(out, tape.cos_of(scaled));
  }
  return out;
}

Mlp::Mlp(MlpConfig config, std::string prefix)
    : config_(std::move(config)), prefix_(std::move(prefix)) {
  if (config_.hidden_layers < 1) throw std::runtime_error("Mlp: hidden_layers must be >= 1");
  if (config_.hidden_width < 1 || config_.input_dim < 1 || config_.output_dim < 1) {
    throw std::runtime_error("Mlp: dimensions must be positive");
  }
  for (int s : config_.skip_connections) {
    if (s < 2 || s > config_.hidden_layers) {
      throw std::runtime_error("Mlp: skip layer " + std::to_string(s) +
                               " outside valid range 2.." +
                               std::to_string(config_.hidden_layers));
    }
  }
}

bool Mlp::has_skip(int layer) const {
  return std::find(config_.skip_connections.begin(), config_.skip_connections.end(), layer) !=
         config_.skip_connections.end();
}

int Mlp::layer_input_dim(int layer) const {
  if (layer == 1) return config_.input_dim;
  return config_.hidden_width + (has_skip(layer) ? config_.input_dim : 0);
}

std::string Mlp::weight_name(int layer) const {
  if (layer == config_.hidden_layers + 1) return prefix_ + "/Wout";
  return prefix_ + "/W" + std::to_string(layer);
}

std::string Mlp::bias_name(int layer) const {
  if (layer == config_.hidden_layers + 1) return prefix_ + "/bout";
  return prefix_ + "/b" + std::to_string(layer);
}

void Mlp::register_params(ParamStore& store) const {
  for (int layer = 1; layer <= config_.hidden_layers; ++layer) {
    store.add(weight_name(layer), config_.hidden_width, layer_input_dim(layer));
    store.add(bias_name(layer), config_.hidden_width, 1);
  }
  store.add(weight_name(config_.hidden_layers + 1), config_.output_dim, config_.hidden_width);
  store.add(bias_name(config_.hidden_layers + 1), config_.output_dim, 1);
}

void Mlp::init_params(ParamStore& store, Rng& rng) const {
  for (int layer = 1; layer <= config_.hidden_layers + 1; ++layer) {
    Eigen::Map<Mat> w = store.value(weight_name(layer));
    const Real limit = std::sqrt(6.0 / static_cast<Real>(w.cols()));
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
    }
    store.value(bias_name(layer)).setZero();
  }
}

Mat Mlp::forward(const ParamStore& store, const Mat& encoded) const {
  if (encoded.rows() != config_.input_dim) {
    throw std::runtime_error("Mlp(" + prefix_ + "): input has " + std::to_string(encoded.rows()) +
                             " rows, expected " + std::to_string(config_.input_dim));
  }
  Mat h;
  for (int layer = 1; layer <= config_.hidden_layers; ++layer) {
    const Mat& in = (layer == 1) ? encoded : h;
    Mat pre;
    if (layer > 1 && has_skip(layer)) {
      Mat stacked(in.rows() + encoded.rows(), in.cols());
      stacked << in, encoded;
      pre = store.value(weight_name(layer)) * stacked;
    } else {
      pre = store.value(weight_name(layer)) * in;
    }
    pre.colwise() += store.value(bias_name(layer)).col(0);
    h = pre.cwiseMax(0.0);
  }
  Mat out = store.value(weight_name(config_.hidden_layers + 1)) * h;
  out.colwise() += store.value(bias_name(config_.hidden_layers + 1)).col(0);
  return out;
}

NodeId Mlp::forward(Tape& tape, NodeId encoded) const {
  if (tape.value(encoded).rows() != config_.input_dim) {
    throw std::runtime_error("Mlp(" + prefix_ + "): traced input has " +
                             std::to_string(tape.value(encoded).rows()) + " rows, expected " +
                             std::to_string(config_.input_dim));
  }
  NodeId h = encoded;
  for (int layer = 1; layer <= config_.hidden_layers; ++layer) {
    NodeId in = (layer == 1) ? encoded : h;
    if (layer > 1 && has_skip(layer)) in = tape.vstack(in, encoded);
    const NodeId w = tape.param(weight_name(layer));
    const NodeId b = tape.param(bias_name(layer));
    h = tape.relu(tape.add_col(tape.matmul(w, in), b));
  }
  const NodeId w = tape.param(weight_name(config_.hidden_layers + 1));
  const NodeId b = tape.param(bias_name(config_.hidden_layers + 1));
  return tape.add_col(tape.matmul(w, h), b);
}

MlpConfig VfNetwork::make_config(int width, int layers, int feature_dim, int pe_x, bool skip) {
  MlpConfig cfg;
  cfg.input_dim = positional_encoding_dim(3, pe_x);
  cfg.hidden_width = width;
  cfg.hidden_layers = layers;
  cfg.output_dim = 3 + feature_dim;
  cfg.pe_frequencies = {pe_x};
  if (skip && layers >= 4) cfg.skip_connections = {4};
  return cfg;
}

VfNetwork::VfNetwork(int hidden_width, int hidden_layers, int feature_dim, int pe_x, bool skip)
    : mlp_(make_config(hidden_width, hidden_layers, feature_dim, pe_x, skip), "vf"),
      feature_dim_(feature_dim),
      pe_x_(pe_x) {}

VfNetwork::Output VfNetwork::forward(const ParamStore& store, const Mat& x) const {
  const Mat out = mlp_.forward(store, positional_encoding(x, pe_x_));
  Output result;
  result.v = out.topRows(3);
  result.z = out.bottomRows(feature_dim_);
  return result;
}

VfNetwork::TracedOutput VfNetwork::forward(Tape& tape, NodeId x) const {
  const NodeId out = mlp_.forward(tape, positional_encoding(tape, x, pe_x_));
  TracedOutput result;
  result.v = tape.rows(out, 0, 3);
  result.z = tape.rows(out, 3, feature_dim_);
  return result;
}

MlpConfig ColorNetwork::make_config(int width, int layers, int feature_dim, int pe_d,
                                    bool encode_x, int pe_x) {
  MlpConfig cfg;
  const int x_dim = encode_x ? positional_encoding_dim(3, pe_x) : 3;
  cfg.input_dim = x_dim + 3 + positional_encoding_dim(3, pe_d) + feature_dim;
  cfg.hidden_width = width;
  cfg.hidden_layers = layers;
  cfg.output_dim = 3;
  cfg.pe_frequencies = {encode_x ? pe_x : 0, 0, pe_d, 0};  // groups: x, v, d, z
  return cfg;
}

ColorNetwork::ColorNetwork(int hidden_width, int hidden_layers, int feature_dim, int pe_d,
                           bool encode_x, int pe_x)
    : mlp_(make_config(hidden_width, hidden_layers, feature_dim, pe_d, encode_x, pe_x), "color"),
      pe_d_(pe_d),
      encode_x_(encode_x),
      pe_x_(pe_x) {}

Mat ColorNetwork::forward(const ParamStore& store, const Mat& x, const Mat& v, const Mat& d,
                          const Mat& z) const {
  const Mat x_enc = encode_x_ ? positional_encoding(x, pe_x_) : x;
  const Mat d_enc = positional_encoding(d, pe_d_);
  Mat in(x_enc.rows() + v.rows() + d_enc.rows() + z.rows(), x.cols());
  in << x_enc, v, d_enc, z;
  const Mat logits = mlp_.forward(store, in);
  return (1.0 / (1.0 + (-logits.array()).exp())).matrix();
}

NodeId ColorNetwork::forward(Tape& tape, NodeId x, NodeId v, NodeId d, NodeId z) const {
  NodeId in = encode_x_ ? positional_encoding(tape, x, pe_x_) : x;
  in = tape.vstack(in, v);
  in = tape.vstack(in, positional_encoding(tape, d, pe_d_));
  in = tape.vstack(in, z);
  return tape.logistic(mlp_.forward(tape, in));
}

VfModel::VfModel(const ModelConfig& config)
    : config_(config),
      vf_(config.vf_hidden_width, config.vf_hidden_layers, config.feature_dim, config.pe_x,
          config.vf_skip),
      color_(config.color_hidden_width, config.color_hidden_layers, config.feature_dim,
             config.pe_d, config.color_pe_x, config.pe_x) {
  if (!(config.alpha0 > 0) || !(config.beta0 > 0)) {
    throw std::runtime_error("VfModel: alpha0 and beta0 must be positive");
  }
  if (std::abs(config.xi) > 1) throw std::runtime_error("VfModel: |xi| must be <= 1");
}

void VfModel::register_params(ParamStore& store) const {
  vf_.register_params(store);
  color_.register_params(store);
  store.add("density/log_alpha", 1, 1);
  store.add("density/mu", 1, 1);
  store.add("density/log_beta", 1, 1);
}

void VfModel::initialize(ParamStore& store, std::uint64_t seed) const {
  Rng rng(mix_seed(seed, 0x696e6974));  // "init" stream
  vf_.init_params(store, rng);
  color_.init_params(store, rng);
  store.set_scalar("density/log_alpha", std::log(config_.alpha0));
  store.set_scalar("density/mu", config_.mu0);
  store.set_scalar("density/log_beta", std::log(config_.beta0));
}

Real VfModel::alpha(const ParamStore& store) { return std::exp(store.scalar("density/log_alpha")); }
Real VfModel::mu(const ParamStore& store) { return store.scalar("density/mu"); }
Real VfModel::beta(const ParamStore& store) { return std::exp(store.scalar("density/log_beta")); }

}  // namespace vfield
