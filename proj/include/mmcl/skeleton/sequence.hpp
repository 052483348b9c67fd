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

#ifndef MMCL_SKELETON_SEQUENCE_HPP
#define MMCL_SKELETON_SEQUENCE_HPP

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "mmcl/core/errors.hpp"
#include "mmcl/core/tensor.hpp"
#include "mmcl/skeleton/topology.hpp"

namespace mmcl {

/// Per-frame 3D joint coordinates, stored as a [T, J, 3] tensor.
class SkeletonSequence {
 public:
  SkeletonSequence(Tensor coords, std::shared_ptr<const GraphTopology> topology,
                   std::optional<std::string> person_id = std::nullopt)
      : coords_(std::move(coords)), topology_(std::move(topology)), person_id_(std::move(person_id)) {
    if (!topology_) throw DataError("skeleton sequence needs a topology");
    if (coords_.rank() != 3 || coords_.dim(2) != 3) {
      throw DataError("skeleton coordinates must be [T,J,3], got " + shape_str(coords_.shape()));
    }
    if (coords_.dim(0) == 0) throw DataError("skeleton sequence has no frames");
    if (coords_.dim(1) != topology_->joint_count()) {
      throw DataError("skeleton has " + std::to_string(coords_.dim(1)) + " joints, topology has " +
                      std::to_string(topology_->joint_count()));
    }
    if (!coords_.all_finite()) throw DataError("skeleton coordinates contain NaN or Inf");
  }

  std::size_t frames() const noexcept { return coords_.dim(0); }
  std::size_t joints() const noexcept { return coords_.dim(1); }
  const Tensor& coords() const noexcept { return coords_; }
  const GraphTopology& topology() const noexcept { return *topology_; }
  const std::shared_ptr<const GraphTopology>& topology_ptr() const noexcept { return topology_; }
  const std::optional<std::string>& person_id() const noexcept { return person_id_; }

  double at(std::size_t t, std::size_t j, std::size_t axis) const { return coords_.at(t, j, axis); }

 private:
  Tensor coords_;
  std::shared_ptr<const GraphTopology> topology_;
  std::optional<std::string> person_id_;
};

enum class Modality { kJoint, kBone, kJointMotion, kBoneMotion };

inline constexpr std::array<Modality, 4> kAllModalities = {Modality::kJoint, Modality::kBone,
                                                           Modality::kJointMotion, Modality::kBoneMotion};

inline std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::kJoint: return "joint";
    case Modality::kBone: return "bone";
    case Modality::kJointMotion: return "joint_motion";
    case Modality::kBoneMotion: return "bone_motion";
  }
  return "joint";
}

inline Modality parse_modality(std::string_view s) {
  for (Modality m : kAllModalities) {
    if (modality_name(m) == s) return m;
  }
  throw UsageError("unknown modality '" + std::string(s) + "' (joint, bone, joint_motion, bone_motion)");
}

/// One derived skeleton modality, same [T, J, 3] shape as its source.
struct ModalityTensor {
  Modality kind = Modality::kJoint;
  Tensor data;
};

namespace detail {

inline void check_tj3(const Tensor& x, const char* op) {
  if (x.rank() != 3 || x.dim(2) != 3) {
    throw DataError(std::string(op) + ": expected [T,J,3], got " + shape_str(x.shape()));
  }
}

}  // namespace detail

/// bone_j = x_j - x_parent(j) per frame; the root's bone is zero.
inline Tensor bone_of(const Tensor& x, const GraphTopology& topo) {
  detail::check_tj3(x, "bone");
  if (x.dim(1) != topo.joint_count()) {
    throw DataError("bone: sequence has " + std::to_string(x.dim(1)) + " joints, topology has " +
                    std::to_string(topo.joint_count()));
  }
  Tensor out(x.shape());
  const std::size_t T = x.dim(0), J = x.dim(1);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < J; ++j) {
      if (j == topo.root()) continue;
      const std::size_t p = topo.parent(j);
      for (std::size_t a = 0; a < 3; ++a) out.at(t, j, a) = x.at(t, j, a) - x.at(t, p, a);
    }
  return out;
}

/// motion_t = x_{t+1} - x_t; the last frame is zero.
inline Tensor motion_of(const Tensor& x) {
  detail::check_tj3(x, "motion");
  Tensor out(x.shape());
  const std::size_t T = x.dim(0), row = x.dim(1) * 3;
  for (std::size_t t = 0; t + 1 < T; ++t)
    for (std::size_t i = 0; i < row; ++i) out[t * row + i] = x[(t + 1) * row + i] - x[t * row + i];
  return out;
}

inline ModalityTensor derive_bone(const SkeletonSequence& seq) {
  return {Modality::kBone, bone_of(seq.coords(), seq.topology())};
}

inline ModalityTensor derive_motion(const SkeletonSequence& seq) {
  return {Modality::kJointMotion, motion_of(seq.coords())};
}

/// Motion of a joint or bone stream. Motion of a motion stream is rejected.
inline ModalityTensor derive_motion(const ModalityTensor& x) {
  switch (x.kind) {
    case Modality::kJoint: return {Modality::kJointMotion, motion_of(x.data)};
    case Modality::kBone: return {Modality::kBoneMotion, motion_of(x.data)};
    default: throw DataError("motion of a motion stream is not a defined modality");
  }
}

inline ModalityTensor derive_modality(const SkeletonSequence& seq, Modality kind) {
  switch (kind) {
    case Modality::kJoint: return {kind, seq.coords()};
    case Modality::kBone: return derive_bone(seq);
    case Modality::kJointMotion: return derive_motion(seq);
    case Modality::kBoneMotion: return derive_motion(derive_bone(seq));
  }
  return {kind, seq.coords()};
}

/// Root-centering: subtracts the root position from every joint, per frame.
inline SkeletonSequence normalize_sequence(const SkeletonSequence& seq) {
  Tensor out = seq.coords();
  const std::size_t T = seq.frames(), J = seq.joints(), r = seq.topology().root();
  for (std::size_t t = 0; t < T; ++t) {
    const std::array<double, 3> root = {seq.at(t, r, 0), seq.at(t, r, 1), seq.at(t, r, 2)};
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t a = 0; a < 3; ++a) out.at(t, j, a) -= root[a];
  }
  return SkeletonSequence(std::move(out), seq.topology_ptr(), seq.person_id());
}

}  // namespace mmcl

#endif  // MMCL_SKELETON_SEQUENCE_HPP
