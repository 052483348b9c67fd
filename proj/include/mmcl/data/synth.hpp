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

// Procedural multimodal action data.
//
// Each class owns a motion (per-joint sinusoids sharing one frequency) and an
// object bit. By default classes come in pairs that share a motion and differ
// only in the object bit. Holding an object shifts the right hand by
// `object_cue` metres, a weak skeletal trace; the same bit is drawn as a red
// marker in the RGB frames and written as a one-hot prefix of the text
// feature, where it is plainly visible.

#ifndef MMCL_DATA_SYNTH_HPP
#define MMCL_DATA_SYNTH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "mmcl/core/errors.hpp"
#include "mmcl/core/rng.hpp"
#include "mmcl/data/dataset.hpp"
#include "mmcl/frm/frm.hpp"
#include "mmcl/skeleton/topology.hpp"

namespace mmcl {

struct SynthClass {
  double frequency = 1.0;  // cycles per sequence
  double amplitude = 0.15;
  double phase = 0.0;
  std::size_t motion_group = 0;  // classes in one group share per-joint patterns
  bool object_bit = false;
};

struct SynthSpec {
  std::size_t class_count = 4;
  std::size_t train_per_class = 20;
  std::size_t test_per_class = 20;
  std::size_t frames = 16;
  double noise = 0.02;
  double object_cue = 0.02;
  std::size_t image_size = 32;
  std::size_t text_dim = 32;
  double text_noise = 0.1;
  std::uint64_t seed = 0;
  /// Explicit per-class parameters; default_classes() when empty.
  std::vector<SynthClass> classes;

  void validate() const {
    if (class_count < 2) throw ConfigError("synthetic data needs at least 2 classes");
    if (noise < 0 || text_noise < 0 || object_cue < 0) throw ConfigError("synthetic noise levels must be >= 0");
    if (frames == 0 || image_size < 8 || text_dim < 2) throw ConfigError("synthetic sizes are too small");
    if (!classes.empty() && classes.size() != class_count) {
      throw ConfigError("synthetic class list has " + std::to_string(classes.size()) + " entries, expected " +
                        std::to_string(class_count));
    }
  }

  /// Pairs (2g, 2g+1) share motion group g; odd classes hold an object.
  std::vector<SynthClass> resolved_classes() const {
    if (!classes.empty()) return classes;
    std::vector<SynthClass> out(class_count);
    for (std::size_t c = 0; c < class_count; ++c) {
      const std::size_t g = c / 2;
      out[c] = {1.0 + static_cast<double>(g), 0.15, 0.7 * static_cast<double>(g), g, c % 2 == 1};
    }
    return out;
  }
};

struct SynthData {
  Dataset train;
  Dataset test;
};

namespace synth_detail {

inline constexpr std::array<std::array<double, 3>, 10> kRestPose = {{
    {0.0, 1.0, 3.0},     // pelvis
    {0.0, 1.3, 3.0},     // spine
    {0.0, 1.55, 3.0},    // neck
    {0.0, 1.75, 3.0},    // head
    {-0.2, 1.5, 3.0},    // left shoulder
    {-0.35, 1.1, 3.0},   // left hand
    {0.2, 1.5, 3.0},     // right shoulder
    {0.35, 1.1, 3.0},    // right hand
    {-0.15, 0.05, 3.0},  // left foot
    {0.15, 0.05, 3.0},   // right foot
}};
inline constexpr std::size_t kRightHand = 7;

struct MotionPattern {
  std::array<std::array<double, 3>, 10> direction{};
  std::array<double, 10> phase{};
};

inline MotionPattern motion_pattern(std::uint64_t seed, std::size_t group) {
  RandomStream rng(seed, "synth/motion/" + std::to_string(group));
  MotionPattern p;
  for (std::size_t j = 1; j < 10; ++j) {  // the pelvis carries the global translation only
    for (double& d : p.direction[j]) d = rng.uniform(-1.0, 1.0);
    p.phase[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  return p;
}

inline void put_block(RgbImage& img, long cx, long cy, long half, std::array<std::uint8_t, 3> rgb) {
  for (long y = cy - half; y <= cy + half; ++y)
    for (long x = cx - half; x <= cx + half; ++x) {
      if (x < 0 || y < 0 || x >= static_cast<long>(img.width) || y >= static_cast<long>(img.height)) continue;
      for (std::size_t c = 0; c < 3; ++c) img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = rgb[c];
    }
}

}  // namespace synth_detail

/// Deterministic in spec (including seed).
inline SynthData synth_dataset(const SynthSpec& spec) {
  using namespace synth_detail;
  spec.validate();
  const auto classes = spec.resolved_classes();
  auto topo = std::make_shared<const GraphTopology>(topology::body10());
  SynthData out;
  out.train = Dataset{topo, spec.class_count, {}};
  out.test = Dataset{topo, spec.class_count, {}};

  std::vector<MotionPattern> patterns;
  for (const SynthClass& c : classes) {
    while (patterns.size() <= c.motion_group) patterns.push_back(motion_pattern(spec.seed, patterns.size()));
  }

  const std::size_t T = spec.frames, S = spec.image_size;
  const double px_per_m = 0.45 * static_cast<double>(S);
  std::size_t serial = 0;
  for (int split = 0; split < 2; ++split) {
    const std::size_t per_class = split == 0 ? spec.train_per_class : spec.test_per_class;
    for (std::size_t k = 0; k < per_class; ++k)
      for (std::size_t c = 0; c < spec.class_count; ++c, ++serial) {
        char id_buf[32];
        std::snprintf(id_buf, sizeof(id_buf), "%s_%05zu", split == 0 ? "train" : "test", serial);
        const std::string id = id_buf;
        const SynthClass& cls = classes[c];
        const MotionPattern& pat = patterns[cls.motion_group];

        RandomStream rng(spec.seed, "synth/sample/" + id);
        const double amp = cls.amplitude * rng.uniform(0.9, 1.1);
        const std::array<double, 3> shift = {rng.uniform(-0.3, 0.3), 0.0, rng.uniform(-0.3, 0.3)};
        Tensor coords(Shape{T, 10, 3});
        for (std::size_t t = 0; t < T; ++t) {
          const double w = 2.0 * std::numbers::pi * cls.frequency * static_cast<double>(t) / static_cast<double>(T);
          for (std::size_t j = 0; j < 10; ++j)
            for (std::size_t a = 0; a < 3; ++a) {
              double v = kRestPose[j][a] + shift[a] + amp * pat.direction[j][a] * std::sin(w + cls.phase + pat.phase[j]);
              if (cls.object_bit && j == kRightHand && a == 1) v -= spec.object_cue;
              coords.at(t, j, a) = v + spec.noise * rng.normal();
            }
        }

        RandomStream pix(spec.seed, "synth/frames/" + id);
        FrameSet frames;
        for (std::size_t t = 0; t < T; ++t) {
          RgbImage img(S, S);
          for (auto& p : img.pixels) p = static_cast<std::uint8_t>(pix.below(80));
          double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
          std::array<long, 10> u{}, v{};
          for (std::size_t j = 0; j < 10; ++j) {
            const double fu = 0.5 * static_cast<double>(S) + px_per_m * coords.at(t, j, 0);
            const double fv = 0.95 * static_cast<double>(S) - px_per_m * coords.at(t, j, 1);
            u[j] = std::lround(std::clamp(fu, 0.0, static_cast<double>(S - 1)));
            v[j] = std::lround(std::clamp(fv, 0.0, static_cast<double>(S - 1)));
            x0 = std::min(x0, static_cast<double>(u[j]));
            x1 = std::max(x1, static_cast<double>(u[j]));
            y0 = std::min(y0, static_cast<double>(v[j]));
            y1 = std::max(y1, static_cast<double>(v[j]));
            put_block(img, u[j], v[j], 0, {200, 200, 200});
          }
          if (cls.object_bit) put_block(img, u[kRightHand], v[kRightHand], 1, {230, 40, 40});
          const double bx = std::max(0.0, x0 - 2), by = std::max(0.0, y0 - 2);
          const double bx1 = std::min(static_cast<double>(S), x1 + 3), by1 = std::min(static_cast<double>(S), y1 + 3);
          frames.boxes.push_back(PersonBox{bx, by, bx1 - bx, by1 - by});
          frames.frames.push_back(std::move(img));
        }

        RandomStream txt(spec.seed, "synth/text/" + id);
        std::vector<double> raw(spec.text_dim);
        raw[cls.object_bit ? 1 : 0] = 1.0;
        for (double& r : raw) r += spec.text_noise * txt.normal();

        Dataset& dst = split == 0 ? out.train : out.test;
        dst.samples.push_back(Sample{id, c, SkeletonSequence(std::move(coords), topo), std::move(frames),
                                     unify_text_features(raw, spec.text_dim, id)});
      }
  }
  return out;
}

}  // namespace mmcl

#endif  // MMCL_DATA_SYNTH_HPP
