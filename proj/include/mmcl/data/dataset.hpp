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

#ifndef MMCL_DATA_DATASET_HPP
#define MMCL_DATA_DATASET_HPP

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mmcl/core/errors.hpp"
#include "mmcl/frm/frm.hpp"
#include "mmcl/rgb/composite.hpp"
#include "mmcl/skeleton/sequence.hpp"

namespace mmcl {

struct Sample {
  std::string id;
  std::size_t label = 0;
  SkeletonSequence skeleton;
  std::optional<FrameSet> frames;
  std::optional<TextFeatureVector> text;
};

struct Dataset {
  std::shared_ptr<const GraphTopology> topology;
  std::size_t class_count = 0;
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }

  void validate() const {
    if (!topology) throw DataError("dataset has no topology");
    if (class_count == 0) throw DataError("dataset has no classes");
    std::set<std::string> seen;
    for (const Sample& s : samples) {
      if (!seen.insert(s.id).second) throw DataError("duplicate sample id '" + s.id + "'");
      if (s.label >= class_count) {
        throw DataError("sample '" + s.id + "' has label " + std::to_string(s.label) + " >= class count " +
                        std::to_string(class_count));
      }
      if (s.skeleton.joints() != topology->joint_count()) {
        throw DataError("sample '" + s.id + "' has " + std::to_string(s.skeleton.joints()) + " joints, topology has " +
                        std::to_string(topology->joint_count()));
      }
      if (s.frames) s.frames->validate();
    }
  }

  std::vector<std::size_t> labels() const {
    std::vector<std::size_t> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) out.push_back(s.label);
    return out;
  }

  std::vector<SkeletonSequence> skeletons() const {
    std::vector<SkeletonSequence> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) out.push_back(s.skeleton);
    return out;
  }
};

}  // namespace mmcl

#endif  // MMCL_DATA_DATASET_HPP
