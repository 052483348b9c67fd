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

// Reader for NTU RGB+D ".skeleton" text files.
//
//   <frame count>
//   per frame:  <body count>
//     per body: <10 body fields>
//               <joint count = 25>
//               25 x <x y z depthX depthY colorX colorY qw qx qy qz trackingState>
//
// Only the camera-space xyz of the first listed body is kept. Frames without a
// body repeat the previous pose (zeros before the first body appears).

#ifndef MMCL_IO_NTU_HPP
#define MMCL_IO_NTU_HPP

#include <filesystem>
#include <sstream>
#include <string>

#include "mmcl/core/errors.hpp"
#include "mmcl/core/tensor.hpp"
#include "mmcl/io/container.hpp"

namespace mmcl::io {

inline constexpr std::size_t kNtuJoints = 25;

inline Tensor parse_ntu_skeleton(const std::string& text, const std::string& source = "skeleton") {
  std::istringstream in(text);
  auto fail = [&](const std::string& what) { return DataError(source + ": " + what); };
  std::size_t frames = 0;
  if (!(in >> frames) || frames == 0) throw fail("missing or zero frame count");
  Tensor out(Shape{frames, kNtuJoints, 3});
  bool seen_body = false;
  for (std::size_t t = 0; t < frames; ++t) {
    std::size_t bodies = 0;
    if (!(in >> bodies)) throw fail("truncated at frame " + std::to_string(t));
    if (bodies == 0 && t > 0) {
      for (std::size_t k = 0; k < kNtuJoints * 3; ++k) out[t * kNtuJoints * 3 + k] = out[(t - 1) * kNtuJoints * 3 + k];
    }
    for (std::size_t b = 0; b < bodies; ++b) {
      std::string field;
      for (int f = 0; f < 10; ++f) {
        if (!(in >> field)) throw fail("truncated body header at frame " + std::to_string(t));
      }
      std::size_t joints = 0;
      if (!(in >> joints) || joints != kNtuJoints) {
        throw fail("frame " + std::to_string(t) + " lists " + std::to_string(joints) + " joints, expected 25");
      }
      for (std::size_t j = 0; j < joints; ++j) {
        double v[12];
        for (double& x : v) {
          if (!(in >> x)) throw fail("truncated joint data at frame " + std::to_string(t));
        }
        if (b == 0) {
          for (std::size_t a = 0; a < 3; ++a) out.at(t, j, a) = v[a];
        }
      }
      if (b == 0) seen_body = true;
    }
  }
  if (!seen_body) throw fail("no body in any frame");
  if (!out.all_finite()) throw fail("non-finite coordinates");
  return out;
}

inline Tensor read_ntu_skeleton(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_ntu_skeleton(std::string(bytes.begin(), bytes.end()), path.string());
}

}  // namespace mmcl::io

#endif  // MMCL_IO_NTU_HPP
