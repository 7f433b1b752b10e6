// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Little-endian scalar encoding shared by the checkpoint and volume formats.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace slicegate::numerics::io {

template <typename U>
void put_le(std::ostream& os, U value) {
  static_assert(std::is_unsigned_v<U>);
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  os.write(bytes, sizeof(U));
}

template <typename U>
U decode_le(const unsigned char* bytes) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

/// Reads exactly sizeof(U) bytes; returns false on a short read.
template <typename U>
bool get_le(std::istream& is, U& value) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) return false;
  value = decode_le<U>(bytes);
  return true;
}

inline void put_floats(std::ostream& os, std::span<const float> values) {
  std::vector<unsigned char> buf(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto u = std::bit_cast<std::uint32_t>(values[i]);
    for (std::size_t b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<unsigned char>((u >> (8 * b)) & 0xFF);
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

/// Reads values.size() floats; returns false on a short read.
inline bool get_floats(std::istream& is, std::span<float> values) {
  std::vector<unsigned char> buf(values.size() * 4);
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(decode_le<std::uint32_t>(buf.data() + i * 4));
  }
  return true;
}

}  // namespace slicegate::numerics::io
