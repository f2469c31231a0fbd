#pragma once

#include <string>
#include <vector>

#include "vfield/losses.hpp"
#include "vfield/mlp.hpp"
#include "vfield/renderer.hpp"
#include "vfield/textio.hpp"

namespace vfield {

/// One entry of the training-configuration registry: the single source of
/// truth for key names, types, defaults, and the documentation printed by the
/// command-line help.
struct ConfigKeySpec {
  enum class Type { Int, Real, Bool };
  const char* name;
  Type type;
  const char* default_value;
  const char* doc;
};

/// Every recognized key, in the order they are written back out.
const std::vector<ConfigKeySpec>& config_registry();

/// Flat key=value training configuration. All keys always hold a value
/// (defaults come from the registry); setters canonicalize the stored text
/// per type, so equal values always serialize identically and to_text() is a
/// stable fingerprint for resume checks.
class TrainConfig {
 public:
  TrainConfig();  ///< every key at its registry default

  /// Applies `key = value` lines (textio grammar: '#' comments, blank lines
  /// skipped). Unknown keys, type errors, and duplicate keys are collected
  /// and reported together in one exception, each prefixed "<origin>:<line>:".
  void apply_text(const std::string& text, const std::string& origin);
  void apply_file(const std::string& path);
  /// Applies "key=value" override strings (no line structure); the same
  /// exhaustive error reporting, prefixed with `origin`.
  void apply_overrides(const std::vector<std::string>& overrides, const std::string& origin);

  /// Cross-field validation (ranges, orderings). Throws with every violation
  /// listed, one per line.
  void validate() const;

  /// Every key in registry order, "key = value" per line.
  std::string to_text() const;

  // ---- typed access (keys are guaranteed present) ----
  int get_int(const std::string& key) const;
  Real get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // ---- structured views consumed by the trainer ----
  ModelConfig model() const;
  SamplerConfig sampler() const;  ///< n_f left at n_f_start; epoch updates apply later
  LossWeights weights() const;

  std::uint64_t seed() const;
  int epochs() const;
  int batches_per_epoch() const;
  int rays_per_batch() const;
  Real lr() const;
  Real lr_decay() const;
  int anneal_start() const;
  int anneal_end() const;
  int window_m() const;
  int n_ext() const;
  int n_cen() const;
  Real ext_shell_inner() const;
  Real ext_shell_outer() const;
  Real cen_ball_radius() const;
  int pretrain_steps() const;
  int pretrain_batch() const;
  Real pretrain_lr() const;
  Real depth_noise_sigma() const;
  int holdout_view() const;
  int psnr_every() const;
  int checkpoint_every() const;
  int threads() const;

 private:
  const std::string& raw(const std::string& key) const;
  /// Canonicalizes and stores one value; returns an error message ("" = ok).
  std::string set_checked(const std::string& key, const std::string& value);

  std::vector<std::string> values_;  // parallel to config_registry()
};

}  // namespace vfield
