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

// Adjacency subsets for subset-decomposed graph convolution.
//
// Matrix convention: adj[i][j] != 0 means joint i aggregates features from
// joint j. The centripetal subset links every joint to its neighbour one hop
// closer to the root; the centrifugal subset is its transpose.

#ifndef MMCL_BACKBONE_ADJACENCY_HPP
#define MMCL_BACKBONE_ADJACENCY_HPP

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "mmcl/core/errors.hpp"
#include "mmcl/core/tensor.hpp"
#include "mmcl/skeleton/topology.hpp"

namespace mmcl {

enum class AdjacencyMode { kStatic, kDynamic };

inline AdjacencyMode parse_adjacency_mode(std::string_view s) {
  if (s == "static") return AdjacencyMode::kStatic;
  if (s == "dynamic") return AdjacencyMode::kDynamic;
  throw UsageError("unknown adjacency mode '" + std::string(s) + "' (static, dynamic)");
}

/// D^{-1/2} A D^{-1/2} with D the row-sum degree of A. A zero-degree node
/// uses scale 1 and gets a unit diagonal entry on its row.
inline Tensor normalize_adjacency(const Tensor& a) {
  if (a.rank() != 2 || a.dim(0) != a.dim(1)) {
    throw DataError("adjacency must be square, got " + shape_str(a.shape()));
  }
  const std::size_t n = a.dim(0);
  std::vector<double> scale(n, 1.0);
  std::vector<bool> isolated(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (a.at(i, j) < 0.0) throw DataError("adjacency has a negative entry");
      deg += a.at(i, j);
    }
    if (deg > 0.0) scale[i] = 1.0 / std::sqrt(deg); else isolated[i] = true;
  }
  Tensor out(a.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = scale[i] * a.at(i, j) * scale[j];
  for (std::size_t i = 0; i < n; ++i) {
    if (isolated[i]) out.at(i, i) = 1.0;
  }
  return out;
}

struct AdjacencySet {
  std::vector<Tensor> subsets;     // raw, nonnegative
  std::vector<Tensor> normalized;  // normalize_adjacency(subsets[s])
  AdjacencyMode mode = AdjacencyMode::kStatic;

  std::size_t size() const noexcept { return subsets.size(); }
  std::size_t joints() const { return subsets.empty() ? 0 : subsets.front().dim(0); }
};

/// Wraps user-supplied subsets (e.g. a hierarchically decomposed graph).
inline AdjacencySet make_adjacency_set(std::vector<Tensor> subsets, AdjacencyMode mode = AdjacencyMode::kStatic) {
  if (subsets.empty()) throw DataError("adjacency set needs at least one subset");
  AdjacencySet set;
  set.mode = mode;
  const std::size_t n = subsets.front().rank() == 2 ? subsets.front().dim(0) : 0;
  for (Tensor& s : subsets) {
    if (s.rank() != 2 || s.dim(0) != n || s.dim(1) != n) {
      throw DataError("adjacency subsets must all be " + std::to_string(n) + "x" + std::to_string(n));
    }
    set.normalized.push_back(normalize_adjacency(s));
    set.subsets.push_back(std::move(s));
  }
  return set;
}

/// (identity, centripetal, centrifugal) subsets by BFS depth from the root.
/// Edges between joints of equal depth belong to neither directed subset.
inline AdjacencySet build_adjacency_subsets(const GraphTopology& topo, AdjacencyMode mode = AdjacencyMode::kStatic) {
  const std::size_t n = topo.joint_count();
  Tensor cp(Shape{n, n});
  for (const auto& [a, b] : topo.edges()) {
    if (topo.depth(a) == topo.depth(b) + 1) cp.at(a, b) = 1.0;
    else if (topo.depth(b) == topo.depth(a) + 1) cp.at(b, a) = 1.0;
  }
  Tensor cf(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cf.at(i, j) = cp.at(j, i);
  return make_adjacency_set({Tensor::identity(n), std::move(cp), std::move(cf)}, mode);
}

}  // namespace mmcl

#endif  // MMCL_BACKBONE_ADJACENCY_HPP
