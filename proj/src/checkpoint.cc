// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/checkpoint.h"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace enhgan {

namespace fs = std::filesystem;

namespace {
constexpr char kMagic[4] = {'E', 'G', 'T', '1'};
}

void write_tensor_blob(const std::string& path, const Tensor& t) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_tensor_blob: cannot open " + path);
  f.write(kMagic, 4);
  const uint32_t ndim = static_cast<uint32_t>(t.ndim());
  f.write(reinterpret_cast<const char*>(&ndim), 4);
  for (int i = 0; i < t.ndim(); ++i) {
    const int64_t d = t.dim(i);
    f.write(reinterpret_cast<const char*>(&d), 8);
  }
  f.write(reinterpret_cast<const char*>(t.data()), t.numel() * 8);
  if (!f) throw std::runtime_error("write_tensor_blob: write failed " + path);
}

Tensor read_tensor_blob(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_tensor_blob: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("read_tensor_blob: bad magic in " + path);
  uint32_t ndim = 0;
  f.read(reinterpret_cast<char*>(&ndim), 4);
  if (!f || ndim > 8) throw std::runtime_error("read_tensor_blob: bad header in " + path);
  std::vector<int64_t> shape(ndim);
  for (auto& d : shape) f.read(reinterpret_cast<char*>(&d), 8);
  Tensor t(shape);
  f.read(reinterpret_cast<char*>(t.data()), t.numel() * 8);
  if (!f) throw std::runtime_error("read_tensor_blob: truncated blob " + path);
  return t;
}

void save_params(const std::string& ckpt_dir, const std::string& ns, const ParamSet& params) {
  const fs::path dir = fs::path(ckpt_dir) / ns;
  fs::create_directories(dir);
  for (size_t i = 0; i < params.size(); ++i)
    write_tensor_blob((dir / (params.item(i).first + ".bin")).string(), params.item(i).second);
}

void load_params(const std::string& ckpt_dir, const std::string& ns, ParamSet& params) {
  const fs::path dir = fs::path(ckpt_dir) / ns;
  for (size_t i = 0; i < params.size(); ++i) {
    const std::string name = params.item(i).first;
    const std::string path = (dir / (name + ".bin")).string();
    if (!fs::exists(path))
      throw std::runtime_error("load_params: missing parameter blob " + path);
    Tensor t = read_tensor_blob(path);
    if (!t.same_shape(params.item(i).second))
      throw std::runtime_error("load_params: shape mismatch for " + ns + "/" + name +
                               " (checkpoint " + t.shape_str() + ", expected " +
                               params.item(i).second.shape_str() + ")");
    params.item(i).second = std::move(t);
  }
}

void save_adam(const std::string& ckpt_dir, const std::string& ns, const ParamSet& layout,
               const AdamState& state) {
  const fs::path dir = fs::path(ckpt_dir) / "optim" / ns;
  fs::create_directories(dir);
  for (size_t i = 0; i < layout.size(); ++i) {
    write_tensor_blob((dir / (layout.item(i).first + ".m.bin")).string(), state.m(i));
    write_tensor_blob((dir / (layout.item(i).first + ".v.bin")).string(), state.v(i));
  }
}

void load_adam(const std::string& ckpt_dir, const std::string& ns, const ParamSet& layout,
               AdamState& state) {
  const fs::path dir = fs::path(ckpt_dir) / "optim" / ns;
  for (size_t i = 0; i < layout.size(); ++i) {
    const std::string name = layout.item(i).first;
    Tensor m = read_tensor_blob((dir / (name + ".m.bin")).string());
    Tensor v = read_tensor_blob((dir / (name + ".v.bin")).string());
    if (!m.same_shape(layout.item(i).second) || !v.same_shape(layout.item(i).second))
      throw std::runtime_error("load_adam: moment shape mismatch for " + ns + "/" + name);
    state.m(i) = std::move(m);
    state.v(i) = std::move(v);
  }
}

}  // namespace enhgan
