#pragma once

#include <string>

#include "vfield/adam.hpp"
#include "vfield/types.hpp"

namespace vfield {

/// Self-describing training snapshot. `config_text` echoes the fully resolved
/// key=value training config, so a checkpoint alone is enough to rebuild the
/// parameter layout (used by render/eval and by --resume).
struct TrainCheckpoint {
  std::string config_text;
  Vec params{0};
  std::int64_t opt_step = 0;
  Vec opt_m{0};
  Vec opt_v{0};
  int epoch = 0;  ///< completed epochs; training resumes at this epoch index
  int n_f = 0;    ///< fine-sample count in effect when the snapshot was taken
};

/// Binary format, all little-endian: 8-byte magic "VFCK0001", u64 config
/// length + bytes, then (u64 count + raw f64 data) for params / opt_m / opt_v,
/// then i64 opt_step, i32 epoch, i32 n_f. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const TrainCheckpoint& ckpt);
TrainCheckpoint load_checkpoint(const std::string& path);

}  // namespace vfield
