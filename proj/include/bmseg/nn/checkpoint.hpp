#pragma once

#include <cstdio>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmseg/nn/tensor.hpp"

namespace bmseg::nn {

// Binary named-tensor container with a JSON sidecar. Float data is stored raw
// (little-endian), so save -> load round-trips are bit exact.
struct TensorStore {
  std::map<std::string, Tensor> tensors;
  nlohmann::json meta;  // config fingerprint, schedule position, rng states, history
};

namespace ckpt_detail {
constexpr char kMagic[8] = {'B', 'M', 'S', 'E', 'G', 'C', 'K', '1'};

inline void put_u64(std::FILE* f, uint64_t v) { std::fwrite(&v, 8, 1, f); }
inline uint64_t get_u64(std::FILE* f, const std::string& path) {
  uint64_t v = 0;
  require(std::fread(&v, 8, 1, f) == 1, "truncated checkpoint ", path);
  return v;
}
}  // namespace ckpt_detail

inline void save_store(const TensorStore& store, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  require(f != nullptr, "cannot write checkpoint ", path);
  std::fwrite(ckpt_detail::kMagic, 1, 8, f);
  ckpt_detail::put_u64(f, store.tensors.size());
  for (const auto& [name, t] : store.tensors) {
    ckpt_detail::put_u64(f, name.size());
    std::fwrite(name.data(), 1, name.size(), f);
    ckpt_detail::put_u64(f, t.shape.size());
    for (int d : t.shape) ckpt_detail::put_u64(f, static_cast<uint64_t>(d));
    ckpt_detail::put_u64(f, t.data.size());
    std::fwrite(t.data.data(), 4, t.data.size(), f);
  }
  const std::string meta = store.meta.dump();
  ckpt_detail::put_u64(f, meta.size());
  std::fwrite(meta.data(), 1, meta.size(), f);
  std::fclose(f);
}

inline TensorStore load_store(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  require(f != nullptr, "cannot open checkpoint ", path);
  char magic[8];
  require(std::fread(magic, 1, 8, f) == 8 && std::memcmp(magic, ckpt_detail::kMagic, 8) == 0,
          path, ": not a checkpoint file");
  TensorStore store;
  const uint64_t n = ckpt_detail::get_u64(f, path);
  for (uint64_t i = 0; i < n; ++i) {
    const uint64_t name_len = ckpt_detail::get_u64(f, path);
    std::string name(name_len, '\0');
    require(std::fread(name.data(), 1, name_len, f) == name_len, "truncated checkpoint ", path);
    const uint64_t ndim = ckpt_detail::get_u64(f, path);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(ckpt_detail::get_u64(f, path));
    const uint64_t count = ckpt_detail::get_u64(f, path);
    Tensor t(shape);
    require(t.data.size() == count, path, ": tensor ", name, " size mismatch");
    require(std::fread(t.data.data(), 4, count, f) == count, "truncated checkpoint ", path);
    store.tensors[name] = std::move(t);
  }
  const uint64_t meta_len = ckpt_detail::get_u64(f, path);
  std::string meta(meta_len, '\0');
  require(std::fread(meta.data(), 1, meta_len, f) == meta_len, "truncated checkpoint ", path);
  store.meta = nlohmann::json::parse(meta);
  std::fclose(f);
  return store;
}

// FNV-1a over a canonical string; used to fingerprint configs in manifests
// and to refuse mismatched checkpoint/config pairs.
inline std::string fingerprint(const std::string& canonical) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace bmseg::nn
