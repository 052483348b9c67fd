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

// 8-bit RGB PNG via libpng's simplified API. Requires linking libpng.

#ifndef MMCL_IO_PNG_HPP
#define MMCL_IO_PNG_HPP

#include <png.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "mmcl/core/errors.hpp"
#include "mmcl/io/container.hpp"
#include "mmcl/rgb/composite.hpp"

namespace mmcl::io {

inline RgbImage read_png(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DataError(path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  RgbImage out(image.height, image.width);
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError(path.string() + ": " + msg);
  }
  return out;
}

inline std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    throw DataError(std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw DataError(std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
  write_file_atomic(path, encode_png(img));
}

}  // namespace mmcl::io

#endif  // MMCL_IO_PNG_HPP
