/* Copyright 2026 The hatkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef HATKIT_SRC_BINARY_IO_H_
#define HATKIT_SRC_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "hatkit/error.h"

namespace hatkit::internal {

inline std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

// 32-bit words (float or int32 bit patterns) as little-endian bytes.
template <typename T>
void write_words(const std::filesystem::path& path, std::span<const T> values) {
  static_assert(sizeof(T) == 4);
  std::vector<std::uint32_t> words(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) words[i] = to_little(std::bit_cast<std::uint32_t>(values[i]));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  if (!out) throw IoError("cannot write " + path.string());
}

template <typename T>
std::vector<T> read_words(const std::filesystem::path& path, std::size_t count) {
  static_assert(sizeof(T) == 4);
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot open " + path.string());
  if (bytes != count * 4) throw IoError(path.string() + ": expected " + std::to_string(count * 4) + " bytes");
  std::ifstream in(path, std::ios::binary);
  std::vector<std::uint32_t> words(count);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(count * 4));
  if (!in) throw IoError("short read from " + path.string());
  std::vector<T> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<T>(to_little(words[i]));
  return out;
}

}  // namespace hatkit::internal

#endif  // HATKIT_SRC_BINARY_IO_H_
