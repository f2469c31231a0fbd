#include "vfield/trainconfig.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace vfield {

const std::vector<ConfigKeySpec>& config_registry() {
  using T = ConfigKeySpec::Type;
  static const std::vector<ConfigKeySpec> registry = {
      {"seed", T::Int, "1", "Master seed; every random stream derives from it"},
      {"epochs", T::Int, "300", "Training epochs"},
      {"batches_per_epoch", T::Int, "1", "Pixel batches drawn per epoch"},
      {"rays_per_batch", T::Int, "512", "Pixels (rays) sampled per batch"},
      {"lr", T::Real, "0.0005", "Initial Adam learning rate"},
      {"lr_decay", T::Real, "0.1", "Learning-rate factor reached at the final epoch"},
      {"anneal_start", T::Int, "70", "Epoch where window annealing begins"},
      {"anneal_end", T::Int, "140", "Epoch where the window reaches one-hot"},
      {"window_m", T::Int, "6", "Sliding-window size M (even)"},
      {"n_c", T::Int, "100", "Coarse samples per ray"},
      {"n_f_start", T::Int, "0", "Fine samples per ray at epoch 0"},
      {"n_f_max", T::Int, "100", "Fine-sample cap"},
      {"n_f_inc", T::Int, "5", "Fine-sample increment"},
      {"n_inc", T::Int, "5", "Epochs between fine-sample increments"},
      {"d_samples", T::Real, "0.3", "Fine-sampling window width around the density peak [m]"},
      {"w_c", T::Real, "1", "Color loss weight"},
      {"w_depth", T::Real, "0.25", "Depth loss weight (0 disables the term)"},
      {"w_norm", T::Real, "0.05", "Unit-norm loss weight"},
      {"w_ext", T::Real, "0.5", "Exterior radial loss weight"},
      {"w_cen", T::Real, "0.5", "Center radial loss weight"},
      {"n_ext", T::Int, "128", "Exterior points per batch (0 disables the term)"},
      {"n_cen", T::Int, "128", "Center points per batch (0 disables the term)"},
      {"ext_shell_inner", T::Real, "1.1",
       "Exterior shell inner radius, as a multiple of the bounds circumradius"},
      {"ext_shell_outer", T::Real, "2",
       "Exterior shell outer radius, as a multiple of the bounds circumradius"},
      {"cen_ball_radius", T::Real, "0.1",
       "Center ball radius, as a multiple of the bounds circumradius"},
      {"vf_hidden_width", T::Int, "256", "Field network hidden width"},
      {"vf_hidden_layers", T::Int, "8", "Field network hidden layer count"},
      {"feature_dim", T::Int, "256", "Geometry feature vector size passed to the color network"},
      {"pe_x", T::Int, "6", "Positional-encoding frequencies for spatial positions"},
      {"vf_skip", T::Bool, "true", "Skip connection into the field network's middle layer"},
      {"color_hidden_width", T::Int, "256", "Color network hidden width"},
      {"color_hidden_layers", T::Int, "4", "Color network hidden layer count"},
      {"pe_d", T::Int, "4", "Positional-encoding frequencies for view directions"},
      {"color_pe_x", T::Bool, "false", "Positionally encode x for the color network too"},
      {"xi", T::Real, "-0.5", "Fixed cosine-similarity threshold of the density transform"},
      {"mu0", T::Real, "0.7", "Initial location of the density transform"},
      {"beta0", T::Real, "0.5", "Initial scale of the density transform"},
      {"alpha0", T::Real, "100", "Initial gain of the density transform"},
      {"pretrain_steps", T::Int, "500",
       "Field pretraining steps toward the scene center (0 skips pretraining)"},
      {"pretrain_batch", T::Int, "256", "Points per pretraining step"},
      {"pretrain_lr", T::Real, "0.001", "Pretraining Adam learning rate"},
      {"depth_noise_sigma", T::Real, "0",
       "Gaussian noise added to reference depths at setup [m] (misses stay misses)"},
      {"holdout_view", T::Int, "-1",
       "Dataset view excluded from training and scored for PSNR (-1 = none)"},
      {"psnr_every", T::Int, "10", "Epochs between holdout PSNR evaluations"},
      {"checkpoint_every", T::Int, "50", "Epochs between checkpoint writes"},
      {"threads", T::Int, "1",
       "Worker cap; this build evaluates serially, and 1 guarantees bit determinism"},
  };
  return registry;
}

namespace {

const std::unordered_map<std::string, int>& registry_index() {
  static const std::unordered_map<std::string, int> index = [] {
    std::unordered_map<std::string, int> m;
    const auto& reg = config_registry();
    for (int i = 0; i < static_cast<int>(reg.size()); ++i) m.emplace(reg[i].name, i);
    return m;
  }();
  return index;
}

std::string canonical_int(long long v) { return std::to_string(v); }

/// Shortest decimal string that parses back to exactly `v`, preferring plain
/// integer form for whole numbers; equal values always canonicalize alike, so
/// to_text() comparisons are value comparisons.
std::string canonical_real(Real v) {
  char buf[64];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  for (int p = 1; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void throw_joined(const std::vector<std::string>& errors) {
  if (errors.empty()) return;
  std::string joined;
  for (const std::string& e : errors) {
    if (!joined.empty()) joined += "\n";
    joined += e;
  }
  throw std::runtime_error(joined);
}

}  // namespace

TrainConfig::TrainConfig() {
  const auto& reg = config_registry();
  values_.resize(reg.size());
  // Defaults pass through the same canonicalization as parsed values, so a
  // default and an explicitly-set equal value serialize identically.
  for (const ConfigKeySpec& spec : reg) {
    const std::string error = set_checked(spec.name, spec.default_value);
    if (!error.empty()) {
      throw std::logic_error(std::string("config registry default broken: ") + error);
    }
  }
}

std::string TrainConfig::set_checked(const std::string& key, const std::string& value) {
  const auto& index = registry_index();
  const auto it = index.find(key);
  if (it == index.end()) return "unknown key '" + key + "'";
  const ConfigKeySpec& spec = config_registry()[static_cast<size_t>(it->second)];
  try {
    switch (spec.type) {
      case ConfigKeySpec::Type::Int:
        values_[static_cast<size_t>(it->second)] = canonical_int(parse_int_value(value, key));
        break;
      case ConfigKeySpec::Type::Real:
        values_[static_cast<size_t>(it->second)] = canonical_real(parse_real_value(value, key));
        break;
      case ConfigKeySpec::Type::Bool:
        values_[static_cast<size_t>(it->second)] = parse_bool_value(value, key) ? "true" : "false";
        break;
    }
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

void TrainConfig::apply_text(const std::string& text, const std::string& origin) {
  const std::vector<KeyValue> pairs = parse_key_values(text, origin);
  std::vector<std::string> errors;
  std::unordered_set<std::string> seen;
  for (const KeyValue& kv : pairs) {
    const std::string where = origin + ":" + std::to_string(kv.line) + ": ";
    if (!seen.insert(kv.key).second) {
      errors.push_back(where + "duplicate key '" + kv.key + "'");
      continue;
    }
    const std::string err = set_checked(kv.key, kv.value);
    if (!err.empty()) errors.push_back(where + err);
  }
  throw_joined(errors);
}

void TrainConfig::apply_file(const std::string& path) { apply_text(read_text_file(path), path); }

void TrainConfig::apply_overrides(const std::vector<std::string>& overrides,
                                  const std::string& origin) {
  std::vector<std::string> errors;
  for (const std::string& item : overrides) {
    const size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      errors.push_back(origin + ": expected key=value, got '" + item + "'");
      continue;
    }
    const std::string key = item.substr(0, eq);
    const std::string err = set_checked(key, item.substr(eq + 1));
    if (!err.empty()) errors.push_back(origin + ": " + err);
  }
  throw_joined(errors);
}

void TrainConfig::validate() const {
  std::vector<std::string> errors;
  const auto require = [&](bool ok, const std::string& message) {
    if (!ok) errors.push_back("config: " + message);
  };
  require(epochs() >= 1, "epochs must be >= 1");
  require(batches_per_epoch() >= 1, "batches_per_epoch must be >= 1");
  require(rays_per_batch() >= 1, "rays_per_batch must be >= 1");
  require(lr() > 0, "lr must be positive");
  require(lr_decay() > 0 && lr_decay() <= 1, "lr_decay must be in (0, 1]");
  require(anneal_start() >= 0, "anneal_start must be >= 0");
  require(anneal_start() < anneal_end(), "anneal_start must be below anneal_end");
  require(anneal_end() <= epochs(), "anneal_end must not exceed epochs");
  require(window_m() >= 2 && window_m() % 2 == 0, "window_m must be even and >= 2");
  require(get_int("n_c") >= 2, "n_c must be >= 2");
  require(get_int("n_f_start") >= 0, "n_f_start must be >= 0");
  require(get_int("n_f_max") >= 0, "n_f_max must be >= 0");
  require(get_int("n_f_inc") >= 0, "n_f_inc must be >= 0");
  require(get_int("n_inc") >= 1, "n_inc must be >= 1");
  require(get_real("d_samples") > 0, "d_samples must be positive");
  for (const char* key : {"w_c", "w_depth", "w_norm", "w_ext", "w_cen"}) {
    require(get_real(key) >= 0, std::string(key) + " must be >= 0");
  }
  require(n_ext() >= 0, "n_ext must be >= 0");
  require(n_cen() >= 0, "n_cen must be >= 0");
  require(ext_shell_inner() > 0, "ext_shell_inner must be positive");
  require(ext_shell_inner() < ext_shell_outer(),
          "ext_shell_inner must be below ext_shell_outer");
  require(cen_ball_radius() > 0, "cen_ball_radius must be positive");
  require(get_int("vf_hidden_width") >= 1, "vf_hidden_width must be >= 1");
  require(get_int("vf_hidden_layers") >= 1, "vf_hidden_layers must be >= 1");
  require(get_int("feature_dim") >= 1, "feature_dim must be >= 1");
  require(get_int("pe_x") >= 0, "pe_x must be >= 0");
  require(get_int("color_hidden_width") >= 1, "color_hidden_width must be >= 1");
  require(get_int("color_hidden_layers") >= 1, "color_hidden_layers must be >= 1");
  require(get_int("pe_d") >= 0, "pe_d must be >= 0");
  require(get_real("beta0") > 0, "beta0 must be positive");
  require(get_real("alpha0") > 0, "alpha0 must be positive");
  require(pretrain_steps() >= 0, "pretrain_steps must be >= 0");
  require(pretrain_batch() >= 1, "pretrain_batch must be >= 1");
  require(pretrain_lr() > 0, "pretrain_lr must be positive");
  require(depth_noise_sigma() >= 0, "depth_noise_sigma must be >= 0");
  require(holdout_view() >= -1, "holdout_view must be >= -1");
  require(psnr_every() >= 1, "psnr_every must be >= 1");
  require(checkpoint_every() >= 1, "checkpoint_every must be >= 1");
  require(threads() >= 1, "threads must be >= 1");
  throw_joined(errors);
}

std::string TrainConfig::to_text() const {
  const auto& reg = config_registry();
  std::string out;
  for (size_t i = 0; i < reg.size(); ++i) {
    out += reg[i].name;
    out += " = ";
    out += values_[i];
    out += "\n";
  }
  return out;
}

const std::string& TrainConfig::raw(const std::string& key) const {
  const auto& index = registry_index();
  const auto it = index.find(key);
  if (it == index.end()) throw std::logic_error("TrainConfig: no key '" + key + "'");
  return values_[static_cast<size_t>(it->second)];
}

int TrainConfig::get_int(const std::string& key) const {
  return static_cast<int>(parse_int_value(raw(key), key));
}

Real TrainConfig::get_real(const std::string& key) const { return parse_real_value(raw(key), key); }

bool TrainConfig::get_bool(const std::string& key) const { return parse_bool_value(raw(key), key); }

ModelConfig TrainConfig::model() const {
  ModelConfig m;
  m.vf_hidden_width = get_int("vf_hidden_width");
  m.vf_hidden_layers = get_int("vf_hidden_layers");
  m.feature_dim = get_int("feature_dim");
  m.pe_x = get_int("pe_x");
  m.vf_skip = get_bool("vf_skip");
  m.color_hidden_width = get_int("color_hidden_width");
  m.color_hidden_layers = get_int("color_hidden_layers");
  m.pe_d = get_int("pe_d");
  m.color_pe_x = get_bool("color_pe_x");
  m.xi = get_real("xi");
  m.mu0 = get_real("mu0");
  m.beta0 = get_real("beta0");
  m.alpha0 = get_real("alpha0");
  return m;
}

SamplerConfig TrainConfig::sampler() const {
  SamplerConfig s;
  s.n_c = get_int("n_c");
  s.n_f_start = get_int("n_f_start");
  s.n_f = s.n_f_start;
  s.n_f_max = get_int("n_f_max");
  s.n_f_inc = get_int("n_f_inc");
  s.n_inc = get_int("n_inc");
  s.d_samples = get_real("d_samples");
  return s;
}

LossWeights TrainConfig::weights() const {
  LossWeights w;
  w.w_c = get_real("w_c");
  w.w_depth = get_real("w_depth");
  w.w_norm = get_real("w_norm");
  w.w_ext = get_real("w_ext");
  w.w_cen = get_real("w_cen");
  return w;
}

std::uint64_t TrainConfig::seed() const {
  return static_cast<std::uint64_t>(parse_int_value(raw("seed"), "seed"));
}
int TrainConfig::epochs() const { return get_int("epochs"); }
int TrainConfig::batches_per_epoch() const { return get_int("batches_per_epoch"); }
int TrainConfig::rays_per_batch() const { return get_int("rays_per_batch"); }
Real TrainConfig::lr() const { return get_real("lr"); }
Real TrainConfig::lr_decay() const { return get_real("lr_decay"); }
int TrainConfig::anneal_start() const { return get_int("anneal_start"); }
int TrainConfig::anneal_end() const { return get_int("anneal_end"); }
int TrainConfig::window_m() const { return get_int("window_m"); }
int TrainConfig::n_ext() const { return get_int("n_ext"); }
int TrainConfig::n_cen() const { return get_int("n_cen"); }
Real TrainConfig::ext_shell_inner() const { return get_real("ext_shell_inner"); }
Real TrainConfig::ext_shell_outer() const { return get_real("ext_shell_outer"); }
Real TrainConfig::cen_ball_radius() const { return get_real("cen_ball_radius"); }
int TrainConfig::pretrain_steps() const { return get_int("pretrain_steps"); }
int TrainConfig::pretrain_batch() const { return get_int("pretrain_batch"); }
Real TrainConfig::pretrain_lr() const { return get_real("pretrain_lr"); }
Real TrainConfig::depth_noise_sigma() const { return get_real("depth_noise_sigma"); }
int TrainConfig::holdout_view() const { return get_int("holdout_view"); }
int TrainConfig::psnr_every() const { return get_int("psnr_every"); }
int TrainConfig::checkpoint_every() const { return get_int("checkpoint_every"); }
int TrainConfig::threads() const { return get_int("threads"); }

}  // namespace vfield
