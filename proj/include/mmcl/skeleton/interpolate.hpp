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

// Cross-domain joint interpolation: every target joint is a fixed convex
// combination of source joints, applied frame by frame.

#ifndef MMCL_SKELETON_INTERPOLATE_HPP
#define MMCL_SKELETON_INTERPOLATE_HPP

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mmcl/core/errors.hpp"
#include "mmcl/skeleton/sequence.hpp"

namespace mmcl {

struct WeightedJoint {
  std::size_t source = 0;
  double weight = 0.0;
};

class JointMapping {
 public:
  static constexpr double kRowSumTolerance = 1e-9;

  JointMapping(std::size_t source_joint_count, std::vector<std::vector<WeightedJoint>> rows)
      : source_joint_count_(source_joint_count), rows_(std::move(rows)) {
    for (std::size_t t = 0; t < rows_.size(); ++t) {
      const std::string where = "joint mapping row " + std::to_string(t);
      if (rows_[t].empty()) throw DataError(where + " is empty");
      double total = 0.0;
      for (const WeightedJoint& w : rows_[t]) {
        if (w.source >= source_joint_count_) {
          throw DataError(where + ": source joint " + std::to_string(w.source) + " >= source joint count " +
                          std::to_string(source_joint_count_));
        }
        if (!(w.weight >= 0.0) || !std::isfinite(w.weight)) throw DataError(where + ": negative or non-finite weight");
        total += w.weight;
      }
      if (std::abs(total - 1.0) > kRowSumTolerance) {
        throw DataError(where + ": weights sum to " + std::to_string(total) + ", expected 1");
      }
    }
  }

  /// Weight 1 on the same joint index.
  static JointMapping identity(std::size_t joints) {
    std::vector<std::vector<WeightedJoint>> rows(joints);
    for (std::size_t j = 0; j < joints; ++j) rows[j] = {{j, 1.0}};
    return JointMapping(joints, std::move(rows));
  }

  /// Linear interpolation over joint index order: target joint t sits at
  /// source position t * (S - 1) / (T - 1) and blends its two neighbours.
  static JointMapping linear(std::size_t source_joints, std::size_t target_joints) {
    if (source_joints == 0 || target_joints == 0) throw DataError("joint mapping needs nonzero joint counts");
    std::vector<std::vector<WeightedJoint>> rows(target_joints);
    for (std::size_t t = 0; t < target_joints; ++t) {
      const double pos = target_joints == 1
                             ? 0.0
                             : static_cast<double>(t) * static_cast<double>(source_joints - 1) /
                                   static_cast<double>(target_joints - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const double frac = pos - static_cast<double>(lo);
      if (frac == 0.0 || lo + 1 >= source_joints) {
        rows[t] = {{std::min(lo, source_joints - 1), 1.0}};
      } else {
        rows[t] = {{lo, 1.0 - frac}, {lo + 1, frac}};
      }
    }
    return JointMapping(source_joints, std::move(rows));
  }

  std::size_t source_joint_count() const noexcept { return source_joint_count_; }
  std::size_t target_joint_count() const noexcept { return rows_.size(); }
  const std::vector<std::vector<WeightedJoint>>& rows() const noexcept { return rows_; }

 private:
  std::size_t source_joint_count_;
  std::vector<std::vector<WeightedJoint>> rows_;
};

/// Re-expresses `seq` on `target` topology using `map`.
inline SkeletonSequence interpolate_skeleton(const SkeletonSequence& seq, const JointMapping& map,
                                             std::shared_ptr<const GraphTopology> target) {
  if (map.source_joint_count() != seq.joints()) {
    throw DataError("joint mapping expects " + std::to_string(map.source_joint_count()) +
                    " source joints, sequence has " + std::to_string(seq.joints()));
  }
  if (!target || target->joint_count() != map.target_joint_count()) {
    throw DataError("joint mapping produces " + std::to_string(map.target_joint_count()) +
                    " joints, target topology does not match");
  }
  const std::size_t T = seq.frames(), Jt = map.target_joint_count();
  Tensor out(Shape{T, Jt, 3});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < Jt; ++j) {
      const auto& row = map.rows()[j];
      if (row.size() == 1 && row[0].weight == 1.0) {
        // copy keeps signed zeros intact
        for (std::size_t a = 0; a < 3; ++a) out.at(t, j, a) = seq.at(t, row[0].source, a);
        continue;
      }
      for (const WeightedJoint& w : row)
        for (std::size_t a = 0; a < 3; ++a) out.at(t, j, a) += w.weight * seq.at(t, w.source, a);
    }
  return SkeletonSequence(std::move(out), std::move(target), seq.person_id());
}

}  // namespace mmcl

#endif  // MMCL_SKELETON_INTERPOLATE_HPP
