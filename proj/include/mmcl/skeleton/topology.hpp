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

#ifndef MMCL_SKELETON_TOPOLOGY_HPP
#define MMCL_SKELETON_TOPOLOGY_HPP

#include <cstddef>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "mmcl/core/errors.hpp"

namespace mmcl {

using JointEdge = std::pair<std::size_t, std::size_t>;

/// Joint/bone tree rooted at `root`. parent[root] == root.
class GraphTopology {
 public:
  /// Builds from a parent list; validates that every joint reaches the root.
  static GraphTopology from_parents(std::vector<std::size_t> parents, std::size_t root) {
    GraphTopology g;
    g.parent_ = std::move(parents);
    g.root_ = root;
    const std::size_t n = g.parent_.size();
    if (n == 0) throw DataError("topology needs at least one joint");
    if (root >= n) throw DataError("root " + std::to_string(root) + " out of range");
    if (g.parent_[root] != root) throw DataError("root must be its own parent");
    for (std::size_t j = 0; j < n; ++j) {
      if (g.parent_[j] >= n) throw DataError("parent of joint " + std::to_string(j) + " out of range");
      // Walking up must hit the root within n steps, otherwise there is a cycle.
      std::size_t cur = j;
      std::size_t steps = 0;
      while (cur != root && steps <= n) {
        cur = g.parent_[cur];
        ++steps;
      }
      if (cur != root) throw DataError("joint " + std::to_string(j) + " does not reach the root");
      if (j != root) g.edges_.emplace_back(j, g.parent_[j]);
    }
    g.depth_ = bfs_depths(n, g.edges_, root);
    return g;
  }

  /// Builds from undirected edges; parents are assigned by BFS from the root.
  /// Edges that close a cycle are kept for adjacency but do not define parents.
  static GraphTopology from_edges(std::size_t joint_count, const std::vector<JointEdge>& edges, std::size_t root) {
    if (joint_count == 0) throw DataError("topology needs at least one joint");
    if (root >= joint_count) throw DataError("root " + std::to_string(root) + " out of range");
    for (const auto& [a, b] : edges) {
      if (a >= joint_count || b >= joint_count) {
        throw DataError("edge (" + std::to_string(a) + "," + std::to_string(b) + ") out of range");
      }
    }
    GraphTopology g;
    g.root_ = root;
    g.edges_ = edges;
    g.depth_ = bfs_depths(joint_count, edges, root);
    g.parent_.assign(joint_count, root);
    for (std::size_t j = 0; j < joint_count; ++j) {
      if (j == root) continue;
      for (const auto& [a, b] : edges) {
        const std::size_t other = a == j ? b : (b == j ? a : joint_count);
        if (other < joint_count && g.depth_[other] + 1 == g.depth_[j]) {
          g.parent_[j] = other;
          break;
        }
      }
    }
    return g;
  }

  std::size_t joint_count() const noexcept { return parent_.size(); }
  std::size_t root() const noexcept { return root_; }
  std::size_t parent(std::size_t j) const { return parent_.at(j); }
  const std::vector<std::size_t>& parents() const noexcept { return parent_; }
  const std::vector<JointEdge>& edges() const noexcept { return edges_; }
  /// Hop distance from the root.
  std::size_t depth(std::size_t j) const { return depth_.at(j); }

  friend bool operator==(const GraphTopology& a, const GraphTopology& b) {
    return a.root_ == b.root_ && a.parent_ == b.parent_ && a.edges_ == b.edges_;
  }

 private:
  static std::vector<std::size_t> bfs_depths(std::size_t n, const std::vector<JointEdge>& edges, std::size_t root) {
    constexpr std::size_t kUnseen = static_cast<std::size_t>(-1);
    std::vector<std::vector<std::size_t>> nbr(n);
    for (const auto& [a, b] : edges) {
      nbr[a].push_back(b);
      nbr[b].push_back(a);
    }
    std::vector<std::size_t> depth(n, kUnseen);
    std::deque<std::size_t> queue{root};
    depth[root] = 0;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v : nbr[u]) {
        if (depth[v] == kUnseen) {
          depth[v] = depth[u] + 1;
          queue.push_back(v);
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (depth[j] == kUnseen) {
        throw DataError("graph is disconnected: joint " + std::to_string(j) + " is unreachable from root " +
                        std::to_string(root));
      }
    }
    return depth;
  }

  GraphTopology() = default;

  std::size_t root_ = 0;
  std::vector<std::size_t> parent_;
  std::vector<JointEdge> edges_;
  std::vector<std::size_t> depth_;
};

namespace topology {

/// The 25-joint Kinect v2 layout used by NTU RGB+D, 0-based, rooted at the
/// spine-shoulder joint (Kinect joint 21).
inline GraphTopology ntu25() {
  // 1-based (child, parent) pairs of the usual NTU inward graph.
  static constexpr std::size_t kPairs[][2] = {
      {1, 2},   {2, 21},  {3, 21},  {4, 3},   {5, 21},  {6, 5},   {7, 6},   {8, 7},
      {9, 21},  {10, 9},  {11, 10}, {12, 11}, {13, 1},  {14, 13}, {15, 14}, {16, 15},
      {17, 1},  {18, 17}, {19, 18}, {20, 19}, {22, 23}, {23, 8},  {24, 25}, {25, 12}};
  std::vector<std::size_t> parents(25);
  parents[20] = 20;
  for (const auto& p : kPairs) parents[p[0] - 1] = p[1] - 1;
  return GraphTopology::from_parents(std::move(parents), 20);
}

/// Ten-joint body used by the synthetic generator:
/// 0 pelvis (root), 1 spine, 2 neck, 3 head, 4 left shoulder, 5 left hand,
/// 6 right shoulder, 7 right hand, 8 left foot, 9 right foot.
inline GraphTopology body10() {
  return GraphTopology::from_parents({0, 0, 1, 2, 2, 4, 2, 6, 0, 0}, 0);
}

}  // namespace topology

}  // namespace mmcl

#endif  // MMCL_SKELETON_TOPOLOGY_HPP
