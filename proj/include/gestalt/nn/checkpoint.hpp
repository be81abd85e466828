#ifndef GESTALT_NN_CHECKPOINT_HPP_
#define GESTALT_NN_CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "gestalt/nn/optim.hpp"
#include "gestalt/nn/tensor.hpp"

namespace gestalt {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

/// Self-describing binary checkpoint container, version 1:
///
///   magic "GSTCKPT1", u32 version
///   u32 meta count,   entries of (string key, string value)
///   u32 tensor count, entries of (string name, i32 n,c,h,w, f32 payload)
///   u8 optimizer flag, then kind/hyperparameters/timestep and the moment
///      buffers when present
///
/// Strings are u32 length + bytes. Field order is fixed and metadata keeps
/// insertion order, so save -> load -> save is byte-stable.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, Tensor4<float>>> tensors;

  bool has_optimizer = false;
  OptimizerKind opt_kind = OptimizerKind::adam;
  double opt_lr = 0, opt_beta1 = 0, opt_beta2 = 0, opt_eps = 0, opt_momentum = 0;
  std::int64_t opt_timestep = 0;
  std::vector<std::vector<float>> opt_m, opt_v;

  void set_meta(const std::string& key, const std::string& value) {
    for (auto& [k, v] : meta) {
      if (k == key) {
        v = value;
        return;
      }
    }
    meta.emplace_back(key, value);
  }

  const std::string& get_meta(const std::string& key) const {
    for (const auto& [k, v] : meta)
      if (k == key) return v;
    throw DataError("checkpoint missing metadata key: " + key);
  }

  bool has_meta(const std::string& key) const {
    for (const auto& [k, v] : meta)
      if (k == key) return true;
    return false;
  }

  const Tensor4<float>& tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return t;
    throw DataError("checkpoint missing tensor: " + name);
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write("GSTCKPT1", 8);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(meta.size()));
    for (const auto& [k, v] : meta) {
      write_str(out, k);
      write_str(out, v);
    }
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
      write_str(out, name);
      write_i32(out, t.n);
      write_i32(out, t.c);
      write_i32(out, t.h);
      write_i32(out, t.w);
      out.write(reinterpret_cast<const char*>(t.v.data()),
                static_cast<std::streamsize>(t.v.size() * sizeof(float)));
    }
    out.put(has_optimizer ? 1 : 0);
    if (has_optimizer) {
      out.put(opt_kind == OptimizerKind::adam ? 0 : 1);
      for (double d : {opt_lr, opt_beta1, opt_beta2, opt_eps, opt_momentum})
        out.write(reinterpret_cast<const char*>(&d), sizeof(double));
      out.write(reinterpret_cast<const char*>(&opt_timestep),
                sizeof(std::int64_t));
      write_buffers(out, opt_m);
      write_buffers(out, opt_v);
    }
    if (!out) throw DataError("short write: " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::string(magic, 8) != "GSTCKPT1")
      throw ParseError(path + ": not a checkpoint file");
    const std::uint32_t version = read_u32(in, path);
    if (version != kVersion)
      throw ParseError(path + ": unsupported checkpoint version " +
                       std::to_string(version));
    Checkpoint ckpt;
    const std::uint32_t nmeta = read_u32(in, path);
    for (std::uint32_t i = 0; i < nmeta; ++i) {
      std::string k = read_str(in, path);
      std::string v = read_str(in, path);
      ckpt.meta.emplace_back(std::move(k), std::move(v));
    }
    const std::uint32_t ntensors = read_u32(in, path);
    for (std::uint32_t i = 0; i < ntensors; ++i) {
      std::string name = read_str(in, path);
      const int n = read_i32(in, path), c = read_i32(in, path),
                h = read_i32(in, path), w = read_i32(in, path);
      Tensor4<float> t(n, c, h, w);
      in.read(reinterpret_cast<char*>(t.v.data()),
              static_cast<std::streamsize>(t.v.size() * sizeof(float)));
      if (in.gcount() != static_cast<std::streamsize>(t.v.size() * sizeof(float)))
        throw ParseError(path + ": truncated tensor " + name);
      ckpt.tensors.emplace_back(std::move(name), std::move(t));
    }
    const int flag = in.get();
    if (flag == EOF) throw ParseError(path + ": truncated optimizer flag");
    ckpt.has_optimizer = flag != 0;
    if (ckpt.has_optimizer) {
      const int kind = in.get();
      ckpt.opt_kind = kind == 0 ? OptimizerKind::adam : OptimizerKind::sgd_momentum;
      for (double* d : {&ckpt.opt_lr, &ckpt.opt_beta1, &ckpt.opt_beta2,
                        &ckpt.opt_eps, &ckpt.opt_momentum})
        in.read(reinterpret_cast<char*>(d), sizeof(double));
      in.read(reinterpret_cast<char*>(&ckpt.opt_timestep), sizeof(std::int64_t));
      ckpt.opt_m = read_buffers(in, path);
      ckpt.opt_v = read_buffers(in, path);
      if (!in) throw ParseError(path + ": truncated optimizer state");
    }
    return ckpt;
  }

private:
  static void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static void write_i32(std::ostream& out, std::int32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static void write_str(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  static void write_buffers(std::ostream& out,
                            const std::vector<std::vector<float>>& bufs) {
    write_u32(out, static_cast<std::uint32_t>(bufs.size()));
    for (const auto& b : bufs) {
      write_u32(out, static_cast<std::uint32_t>(b.size()));
      out.write(reinterpret_cast<const char*>(b.data()),
                static_cast<std::streamsize>(b.size() * sizeof(float)));
    }
  }
  static std::uint32_t read_u32(std::istream& in, const std::string& path) {
    std::uint32_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ParseError(path + ": truncated field");
    return v;
  }
  static std::int32_t read_i32(std::istream& in, const std::string& path) {
    std::int32_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ParseError(path + ": truncated field");
    return v;
  }
  static std::string read_str(std::istream& in, const std::string& path) {
    const std::uint32_t len = read_u32(in, path);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw ParseError(path + ": truncated string");
    return s;
  }
  static std::vector<std::vector<float>> read_buffers(std::istream& in,
                                                      const std::string& path) {
    const std::uint32_t count = read_u32(in, path);
    std::vector<std::vector<float>> bufs(count);
    for (auto& b : bufs) {
      b.resize(read_u32(in, path));
      in.read(reinterpret_cast<char*>(b.data()),
              static_cast<std::streamsize>(b.size() * sizeof(float)));
    }
    return bufs;
  }
};

}  // namespace gestalt

#endif  // GESTALT_NN_CHECKPOINT_HPP_
