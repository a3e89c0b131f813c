// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "icat/errors.hpp"

namespace icat::io {

// FNV-1a, used for content hashes of generated files and cache keys.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  return fnv1a64(s.data(), s.size(), seed);
}

// Byte-explicit little-endian serialization, portable across hosts.
inline void write_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void write_u16(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  write_bytes(out, b, 2);
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(out, b, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(out, b, 8);
}

inline void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  __builtin_memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

inline void write_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  __builtin_memcpy(&bits, &v, 4);
  write_u32(out, bits);
}

// Tracks the byte offset so truncation errors can name the exact position.
class Reader {
 public:
  Reader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  std::size_t offset() const { return offset_; }

  void read_exact(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(name_ + ": truncated file at byte offset " + std::to_string(offset_));
    }
    offset_ += n;
  }

  std::uint16_t u16_le() {
    unsigned char b[2];
    read_exact(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }

  std::uint32_t u32_le() {
    unsigned char b[4];
    read_exact(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint32_t u32_be() {
    unsigned char b[4];
    read_exact(b, 4);
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
  }

  std::uint64_t u64_le() {
    std::uint64_t v = 0;
    unsigned char b[8];
    read_exact(b, 8);
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  double f64_le() {
    const std::uint64_t bits = u64_le();
    double v;
    __builtin_memcpy(&v, &bits, 8);
    return v;
  }

  float f32_le() {
    const std::uint32_t bits = u32_le();
    float v;
    __builtin_memcpy(&v, &bits, 4);
    return v;
  }

  const std::string& name() const { return name_; }

 private:
  std::istream& in_;
  std::string name_;
  std::size_t offset_ = 0;
};

}  // namespace icat::io
