#include "vfield/checkpoint.hpp"

#include <bit>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");
static_assert(sizeof(vfield::Real) == 8, "checkpoint format stores raw f64");

namespace vfield {
namespace {

constexpr char kMagic[8] = {'V', 'F', 'C', 'K', '0', '0', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error(path + ": truncated checkpoint");
  return v;
}

void put_vec(std::ostream& out, const Vec& v) {
  put_u64(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(Real)));
}

Vec get_vec(std::istream& in, const std::string& path) {
  const std::uint64_t n = get_u64(in, path);
  if (n > (1ull << 32)) throw std::runtime_error(path + ": implausible vector size");
  Vec v(static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(Real)));
  if (!in) throw std::runtime_error(path + ": truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainCheckpoint& ckpt) {
  if (ckpt.opt_m.size() != ckpt.params.size() || ckpt.opt_v.size() != ckpt.params.size()) {
    throw std::runtime_error(path + ": optimizer state does not match parameter count");
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(tmp + ": cannot open for writing");
    out.write(kMagic, 8);
    put_u64(out, ckpt.config_text.size());
    out.write(ckpt.config_text.data(), static_cast<std::streamsize>(ckpt.config_text.size()));
    put_vec(out, ckpt.params);
    put_vec(out, ckpt.opt_m);
    put_vec(out, ckpt.opt_v);
    out.write(reinterpret_cast<const char*>(&ckpt.opt_step), sizeof(ckpt.opt_step));
    const std::int32_t epoch = ckpt.epoch;
    const std::int32_t n_f = ckpt.n_f;
    out.write(reinterpret_cast<const char*>(&epoch), sizeof(epoch));
    out.write(reinterpret_cast<const char*>(&n_f), sizeof(n_f));
    out.flush();
    if (!out) throw std::runtime_error(tmp + ": write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error(path + ": rename failed: " + std::strerror(errno));
  }
}

TrainCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error(path + ": not a checkpoint file (bad magic)");
  }
  TrainCheckpoint ckpt;
  const std::uint64_t config_len = get_u64(in, path);
  if (config_len > (1ull << 24)) throw std::runtime_error(path + ": implausible config size");
  ckpt.config_text.resize(config_len);
  in.read(ckpt.config_text.data(), static_cast<std::streamsize>(config_len));
  if (!in) throw std::runtime_error(path + ": truncated checkpoint");
  ckpt.params = get_vec(in, path);
  ckpt.opt_m = get_vec(in, path);
  ckpt.opt_v = get_vec(in, path);
  in.read(reinterpret_cast<char*>(&ckpt.opt_step), sizeof(ckpt.opt_step));
  std::int32_t epoch = 0, n_f = 0;
  in.read(reinterpret_cast<char*>(&epoch), sizeof(epoch));
  in.read(reinterpret_cast<char*>(&n_f), sizeof(n_f));
  if (!in) throw std::runtime_error(path + ": truncated checkpoint");
  ckpt.epoch = epoch;
  ckpt.n_f = n_f;
  if (ckpt.opt_m.size() != ckpt.params.size() || ckpt.opt_v.size() != ckpt.params.size()) {
    throw std::runtime_error(path + ": optimizer state does not match parameter count");
  }
  return ckpt;
}

}  // namespace vfield
