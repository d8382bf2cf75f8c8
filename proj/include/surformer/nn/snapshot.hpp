#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "surformer/core/tensor.hpp"

namespace surformer::nn {

/// Weight snapshot container, version "SFV1-W1". Layout (all little-endian):
///   8 bytes   magic "SFV1-W1\n"
///   u32       entry count
///   per entry u32 name length, name bytes, u8 dtype (0=f64, 1=f32),
///             u8 rank, u64 dims[rank], u64 byte offset into the data section
///   u64       data section size in bytes
///   data
enum class SnapshotDtype : std::uint8_t { F64 = 0, F32 = 1 };

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

inline void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

class ByteReader {
 public:
  ByteReader(const char* data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s(data_ + pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > size_) throw IoError("weight snapshot: truncated file");
  }
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace detail

constexpr char kSnapshotMagic[8] = {'S', 'F', 'V', '1', '-', 'W', '1', '\n'};

/// Writes named tensors in registry order. dtype applies to every entry.
inline void save_weights(const std::string& path,
                         const std::vector<std::pair<std::string, const Tensor*>>& tensors,
                         SnapshotDtype dtype = SnapshotDtype::F64) {
  std::string manifest;
  std::string data;
  detail::put_u32(manifest, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    detail::put_u32(manifest, static_cast<std::uint32_t>(name.size()));
    manifest.append(name);
    manifest.push_back(static_cast<char>(dtype));
    manifest.push_back(static_cast<char>(t->rank()));
    for (std::size_t d : t->shape()) detail::put_u64(manifest, d);
    detail::put_u64(manifest, data.size());
    if (dtype == SnapshotDtype::F64) {
      for (std::size_t i = 0; i < t->size(); ++i) detail::put_f64(data, (*t)[i]);
    } else {
      for (std::size_t i = 0; i < t->size(); ++i) {
        detail::put_f32(data, static_cast<float>((*t)[i]));
      }
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("weight snapshot: cannot open " + path + " for writing");
  os.write(kSnapshotMagic, 8);
  os.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  std::string size_field;
  detail::put_u64(size_field, data.size());
  os.write(size_field.data(), 8);
  os.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!os) throw IoError("weight snapshot: write failed for " + path);
}

/// Loads every entry; f32 entries widen back to doubles.
inline std::vector<std::pair<std::string, Tensor>> load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("weight snapshot: cannot open " + path);
  std::string blob((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (blob.size() < 8 || std::memcmp(blob.data(), kSnapshotMagic, 8) != 0) {
    throw IoError("weight snapshot: bad magic in " + path + " (expected SFV1-W1)");
  }
  detail::ByteReader r(blob.data() + 8, blob.size() - 8);
  const std::uint32_t count = r.u32();
  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    SnapshotDtype dtype;
    std::uint64_t offset;
  };
  std::vector<Entry> entries(count);
  for (auto& e : entries) {
    const std::uint32_t name_len = r.u32();
    e.name = r.bytes(name_len);
    e.dtype = static_cast<SnapshotDtype>(r.u8());
    const std::uint8_t rank = r.u8();
    e.shape.resize(rank);
    for (auto& d : e.shape) d = static_cast<std::size_t>(r.u64());
    e.offset = r.u64();
  }
  const std::uint64_t data_size = r.u64();
  const std::string data = r.bytes(data_size);

  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (const auto& e : entries) {
    Tensor t(e.shape);
    const std::size_t width = e.dtype == SnapshotDtype::F64 ? 8 : 4;
    if (e.offset + t.size() * width > data.size()) {
      throw IoError("weight snapshot: entry '" + e.name + "' overruns data section");
    }
    const char* src = data.data() + e.offset;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (e.dtype == SnapshotDtype::F64) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
          bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(src[i * 8 + b]))
                  << (8 * b);
        }
        double d;
        std::memcpy(&d, &bits, 8);
        t[i] = d;
      } else {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) {
          bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(src[i * 4 + b]))
                  << (8 * b);
        }
        float f;
        std::memcpy(&f, &bits, 4);
        t[i] = static_cast<double>(f);
      }
    }
    out.emplace_back(e.name, std::move(t));
  }
  return out;
}

/// Convenience map view of load_weights.
inline std::map<std::string, Tensor> load_weights_map(const std::string& path) {
  std::map<std::string, Tensor> m;
  for (auto& [name, t] : load_weights(path)) m.emplace(name, std::move(t));
  return m;
}

}  // namespace surformer::nn
