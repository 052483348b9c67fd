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

// Temporal composite images: person crops of m uniformly sampled frames,
// resized and laid out left to right in chronological order.

#ifndef MMCL_RGB_COMPOSITE_HPP
#define MMCL_RGB_COMPOSITE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmcl/core/errors.hpp"
#include "mmcl/core/rng.hpp"
#include "mmcl/core/tensor.hpp"

namespace mmcl {

/// 8-bit interleaved RGB, row-major.
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(std::size_t h, std::size_t w) : height(h), width(w), pixels(h * w * 3, 0) {}

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Real-valued interleaved RGB.
struct FloatImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  FloatImage() = default;
  FloatImage(std::size_t h, std::size_t w) : height(h), width(w), data(h * w * 3, 0.0) {}

  double& at(std::size_t y, std::size_t x, std::size_t c) { return data[(y * width + x) * 3 + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const { return data[(y * width + x) * 3 + c]; }
  friend bool operator==(const FloatImage&, const FloatImage&) = default;
};

/// Person box in pixel units: top-left corner plus extent.
struct PersonBox {
  double x = 0, y = 0, w = 0, h = 0;
  friend bool operator==(const PersonBox&, const PersonBox&) = default;
};

struct FrameSet {
  std::vector<RgbImage> frames;
  std::vector<std::optional<PersonBox>> boxes;  // empty, or one entry per frame

  void validate() const {
    if (frames.empty()) throw DataError("frame set is empty");
    if (!boxes.empty() && boxes.size() != frames.size()) {
      throw DataError("frame set has " + std::to_string(frames.size()) + " frames but " +
                      std::to_string(boxes.size()) + " box entries");
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const auto& b = boxes[i];
      if (!b) continue;
      const RgbImage& f = frames[i];
      if (b->x < 0 || b->y < 0 || b->x + b->w > static_cast<double>(f.width) ||
          b->y + b->h > static_cast<double>(f.height)) {
        throw DataError("box of frame " + std::to_string(i) + " leaves the frame");
      }
    }
  }

  std::optional<PersonBox> box(std::size_t i) const { return boxes.empty() ? std::nullopt : boxes[i]; }
};

enum class SamplingMode { kEvaluation, kTraining };

/// m frame indices in [0, n), one per equal segment: the segment centre in
/// evaluation mode, a uniform draw inside the segment in training mode.
inline std::vector<std::size_t> uniform_sample_indices(std::size_t n, std::size_t m,
                                                       SamplingMode mode = SamplingMode::kEvaluation,
                                                       RandomStream* rng = nullptr) {
  if (n == 0 || m == 0) throw DataError("uniform sampling needs n >= 1 and m >= 1");
  if (mode == SamplingMode::kTraining && rng == nullptr) throw UsageError("training-mode sampling needs a stream");
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double offset = mode == SamplingMode::kEvaluation ? 0.5 : rng->uniform();
    const auto k = static_cast<std::size_t>(
        std::floor((static_cast<double>(i) + offset) * static_cast<double>(n) / static_cast<double>(m)));
    idx[i] = std::min(k, n - 1);
  }
  return idx;
}

/// Bilinear resize of the box region (whole frame when no box) to out_h x out_w,
/// values scaled to [0, 1]. Sample positions follow pixel-centre alignment.
inline FloatImage crop_and_resize(const RgbImage& frame, const std::optional<PersonBox>& box, std::size_t out_h,
                                  std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw DataError("crop target size must be positive");
  if (frame.height == 0 || frame.width == 0) throw DataError("empty frame");
  const PersonBox b = box.value_or(PersonBox{0, 0, static_cast<double>(frame.width), static_cast<double>(frame.height)});
  if (!(b.w > 0) || !(b.h > 0)) throw DataError("degenerate person box (zero area)");
  if (b.x < 0 || b.y < 0 || b.x + b.w > static_cast<double>(frame.width) ||
      b.y + b.h > static_cast<double>(frame.height)) {
    throw DataError("person box leaves the frame");
  }
  FloatImage out(out_h, out_w);
  const double max_y = static_cast<double>(frame.height - 1), max_x = static_cast<double>(frame.width - 1);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const double sy = std::clamp(b.y + (static_cast<double>(oy) + 0.5) * b.h / static_cast<double>(out_h) - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const std::size_t y1 = std::min(y0 + 1, frame.height - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double sx = std::clamp(b.x + (static_cast<double>(ox) + 0.5) * b.w / static_cast<double>(out_w) - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const std::size_t x1 = std::min(x0 + 1, frame.width - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = (1 - fy) * ((1 - fx) * frame.at(y0, x0, c) + fx * frame.at(y0, x1, c)) +
                         fy * ((1 - fx) * frame.at(y1, x0, c) + fx * frame.at(y1, x1, c));
        out.at(oy, ox, c) = v / 255.0;
      }
    }
  }
  return out;
}

struct TemporalCompositeImage {
  FloatImage image;  // h x (m*w) x 3
  std::size_t m = 0;
};

/// Lays crops out left to right; no standardization.
inline FloatImage concat_blocks(std::span<const FloatImage> crops) {
  if (crops.empty()) throw DataError("nothing to concatenate");
  const std::size_t h = crops[0].height, w = crops[0].width;
  for (const FloatImage& c : crops) {
    if (c.height != h || c.width != w) throw DataError("crops have mixed sizes");
  }
  FloatImage out(h, w * crops.size());
  for (std::size_t i = 0; i < crops.size(); ++i)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t c = 0; c < 3; ++c) out.at(y, i * w + x, c) = crops[i].at(y, x, c);
  return out;
}

/// Per-channel zero mean, unit variance; a flat channel is only centred.
inline void standardize_channels(FloatImage& img) {
  const std::size_t n = img.height * img.width;
  if (n == 0) return;
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += img.data[i * 3 + c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (img.data[i * 3 + c] - mean) * (img.data[i * 3 + c] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    const double inv = sd > 1e-12 ? 1.0 / sd : 1.0;
    for (std::size_t i = 0; i < n; ++i) img.data[i * 3 + c] = (img.data[i * 3 + c] - mean) * inv;
  }
}

inline TemporalCompositeImage concat_temporal(std::span<const FloatImage> crops) {
  TemporalCompositeImage out{concat_blocks(crops), crops.size()};
  standardize_channels(out.image);
  return out;
}

/// Full data path for one sample: sample, crop, resize, concatenate.
inline TemporalCompositeImage build_composite(const FrameSet& frames, std::size_t m, std::size_t out_h,
                                              std::size_t out_w, SamplingMode mode = SamplingMode::kEvaluation,
                                              RandomStream* rng = nullptr) {
  frames.validate();
  std::vector<FloatImage> crops;
  for (std::size_t i : uniform_sample_indices(frames.frames.size(), m, mode, rng)) {
    crops.push_back(crop_and_resize(frames.frames[i], frames.box(i), out_h, out_w));
  }
  return concat_temporal(crops);
}

/// Stacks composites into an [N, H, W, 3] batch tensor.
inline Tensor stack_images(std::span<const FloatImage> images) {
  if (images.empty()) throw DataError("no images to stack");
  const std::size_t h = images[0].height, w = images[0].width;
  Tensor out(Shape{images.size(), h, w, 3});
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].height != h || images[i].width != w) throw DataError("composite images have mixed sizes");
    std::copy(images[i].data.begin(), images[i].data.end(), out.data() + i * h * w * 3);
  }
  return out;
}

}  // namespace mmcl

#endif  // MMCL_RGB_COMPOSITE_HPP
