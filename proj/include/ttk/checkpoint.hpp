#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ttk/error.hpp"
#include "ttk/nn.hpp"
#include "ttk/tensor.hpp"

// Parameter checkpoints: little-endian binary, name-indexed f32 arrays.
// Layout: "TTCK", u32 version, u32 count, then per entry
// u32 name_len, name bytes, u32 ndim, u32 dims..., f32 data.
namespace ttk::ckpt {

struct Entry {
  std::vector<int> shape;
  std::vector<float> data;
};

using Archive = std::map<std::string, Entry>;

namespace detail {

template <typename V>
void write_raw(std::ofstream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_raw(std::ifstream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw RuntimeFailure("checkpoint: truncated file");
  return v;
}

}  // namespace detail

inline void save(const std::string& path, const Archive& entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw RuntimeFailure("checkpoint: cannot open " + path + " for writing");
  os.write("TTCK", 4);
  detail::write_raw<uint32_t>(os, 1);
  detail::write_raw<uint32_t>(os, static_cast<uint32_t>(entries.size()));
  for (const auto& [name, e] : entries) {
    detail::write_raw<uint32_t>(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_raw<uint32_t>(os, static_cast<uint32_t>(e.shape.size()));
    for (int d : e.shape) detail::write_raw<uint32_t>(os, static_cast<uint32_t>(d));
    os.write(reinterpret_cast<const char*>(e.data.data()), static_cast<std::streamsize>(e.data.size() * sizeof(float)));
  }
  if (!os) throw RuntimeFailure("checkpoint: write failed for " + path);
}

inline Archive load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeFailure("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TTCK", 4) != 0) throw ValidationError("checkpoint: bad magic in " + path);
  uint32_t version = detail::read_raw<uint32_t>(is);
  if (version != 1) throw ValidationError("checkpoint: unsupported version " + std::to_string(version));
  uint32_t count = detail::read_raw<uint32_t>(is);
  Archive out;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = detail::read_raw<uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw RuntimeFailure("checkpoint: truncated file");
    uint32_t ndim = detail::read_raw<uint32_t>(is);
    Entry e;
    int64_t numel = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      uint32_t dim = detail::read_raw<uint32_t>(is);
      e.shape.push_back(static_cast<int>(dim));
      numel *= dim;
    }
    e.data.resize(static_cast<size_t>(numel));
    is.read(reinterpret_cast<char*>(e.data.data()), static_cast<std::streamsize>(numel * sizeof(float)));
    if (!is) throw RuntimeFailure("checkpoint: truncated payload for " + name);
    out.emplace(std::move(name), std::move(e));
  }
  return out;
}

template <typename T>
Archive from_params(const nn::NamedParams<T>& params) {
  Archive out;
  for (const auto& [name, t] : params) {
    Entry e;
    e.shape = t.shape();
    e.data.reserve(t.values().size());
    for (T v : t.values()) e.data.push_back(static_cast<float>(v));
    out.emplace(name, std::move(e));
  }
  return out;
}

template <typename T>
void apply_to_params(const Archive& archive, nn::NamedParams<T>& params) {
  for (auto& [name, t] : params) {
    auto it = archive.find(name);
    if (it == archive.end()) throw ValidationError("checkpoint: missing parameter " + name);
    if (it->second.shape != t.shape())
      throw ValidationError("checkpoint: shape mismatch for " + name + ": file " + tc::shape_str(it->second.shape) +
                            " vs model " + tc::shape_str(t.shape()));
    auto& vals = t.values();
    for (size_t i = 0; i < vals.size(); ++i) vals[i] = static_cast<T>(it->second.data[i]);
  }
}

}  // namespace ttk::ckpt
