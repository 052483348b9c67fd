// Copyright 2026 The MMCL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tensor container (.mmct), all integers little-endian:
//
//   offset  size     field
//   0       4        magic "MMCT"
//   4       4        version, u32 = 1
//   8       1        dtype, u8: 1 = float32, 2 = float64
//   9       1        rank, u8
//   10      8*rank   dims, u64 each
//   ...     numel*sz payload, row-major IEEE-754 little-endian

#ifndef MMCL_IO_CONTAINER_HPP
#define MMCL_IO_CONTAINER_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mmcl/core/errors.hpp"
#include "mmcl/core/tensor.hpp"

namespace mmcl::io {

enum class DType : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

inline constexpr char kContainerMagic[4] = {'M', 'M', 'C', 'T'};
inline constexpr std::uint32_t kContainerVersion = 1;

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

/// Writes to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::vector<std::uint8_t> encode_tensor(const Tensor& t, DType dtype = DType::kFloat64) {
  if (t.rank() > 255) throw DataError("tensor rank exceeds container limit");
  std::vector<std::uint8_t> out(kContainerMagic, kContainerMagic + 4);
  detail::put_le<std::uint32_t>(out, kContainerVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) detail::put_le<std::uint64_t>(out, d);
  out.reserve(out.size() + t.numel() * (dtype == DType::kFloat32 ? 4 : 8));
  for (double v : t.values()) {
    if (dtype == DType::kFloat32) detail::put_le<float>(out, static_cast<float>(v));
    else detail::put_le<double>(out, v);
  }
  return out;
}

struct DecodedTensor {
  Tensor tensor;
  DType dtype = DType::kFloat64;
};

inline DecodedTensor decode_tensor(const std::vector<std::uint8_t>& bytes, const std::string& source = "buffer") {
  auto fail = [&](const std::string& msg) { return DataError(source + ": " + msg); };
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kContainerMagic, 4) != 0) throw fail("not a tensor container");
  const auto version = detail::get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kContainerVersion) throw fail("unsupported container version " + std::to_string(version));
  const std::uint8_t code = bytes[8];
  if (code != 1 && code != 2) throw fail("unknown dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const std::size_t rank = bytes[9];
  std::size_t offset = 10;
  if (bytes.size() < offset + 8 * rank) throw fail("truncated header");
  Shape shape(rank);
  for (std::size_t i = 0; i < rank; ++i, offset += 8) shape[i] = detail::get_le<std::uint64_t>(bytes.data() + offset);
  const std::size_t width = dtype == DType::kFloat32 ? 4 : 8;
  const std::size_t n = shape_numel(shape);
  if (bytes.size() != offset + n * width) {
    throw fail("payload is " + std::to_string(bytes.size() - offset) + " bytes, expected " + std::to_string(n * width));
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i, offset += width) {
    data[i] = dtype == DType::kFloat32 ? static_cast<double>(detail::get_le<float>(bytes.data() + offset))
                                       : detail::get_le<double>(bytes.data() + offset);
  }
  return {Tensor(std::move(shape), std::move(data)), dtype};
}

inline void write_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype = DType::kFloat64) {
  write_file_atomic(path, encode_tensor(t, dtype));
}

inline DecodedTensor read_tensor(const std::filesystem::path& path) {
  return decode_tensor(read_file(path), path.string());
}

}  // namespace mmcl::io

#endif  // MMCL_IO_CONTAINER_HPP
