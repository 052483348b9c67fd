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

#ifndef MMCL_TRAIN_EVALUATE_HPP
#define MMCL_TRAIN_EVALUATE_HPP

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmcl/core/errors.hpp"
#include "mmcl/skeleton/interpolate.hpp"
#include "mmcl/train/model.hpp"

namespace mmcl {

using AccuracyMap = std::map<std::size_t, double>;  // k -> top-k accuracy

/// Position of the label when classes are ranked by score, ties going to the
/// lower class index (the same order argmax uses).
inline std::size_t label_rank(std::span<const double> row, std::size_t label) {
  std::size_t rank = 0;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (row[c] > row[label] || (row[c] == row[label] && c < label)) ++rank;
  }
  return rank;
}

inline std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

inline std::vector<std::size_t> argmax_rows(const Tensor& scores) {
  std::vector<std::size_t> out(scores.dim(0));
  const std::size_t C = scores.dim(1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = argmax(std::span<const double>(scores.data() + i * C, C));
  return out;
}

inline AccuracyMap topk_accuracy(const Tensor& scores, const std::vector<std::size_t>& labels,
                                 const std::vector<std::size_t>& ks) {
  if (scores.rank() != 2 || scores.dim(0) != labels.size()) throw DataError("scores and labels disagree in length");
  if (labels.empty()) throw UsageError("cannot evaluate an empty dataset");
  const std::size_t C = scores.dim(1);
  AccuracyMap out;
  for (std::size_t k : ks) {
    if (k == 0) throw ConfigError("top-k needs k >= 1");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= C) throw DataError("label " + std::to_string(labels[i]) + " is out of range");
      if (label_rank(std::span<const double>(scores.data() + i * C, C), labels[i]) < k) ++hits;
    }
    out[k] = static_cast<double>(hits) / static_cast<double>(labels.size());
  }
  return out;
}

/// Skeleton-only evaluation; RGB and text never enter this path.
inline AccuracyMap evaluate_topk(const MmclModel& model, const ParameterSet& params,
                                 std::span<const SkeletonSequence> skeletons, const std::vector<std::size_t>& labels,
                                 const std::vector<std::size_t>& ks = {1, 5}) {
  if (skeletons.empty()) throw UsageError("cannot evaluate an empty dataset");
  return topk_accuracy(predict_scores(model, params, skeletons), labels, ks);
}

// ---------------------------------------------------------------------------
// Multi-stream ensemble

struct StreamResult {
  Modality kind = Modality::kJoint;
  std::vector<std::string> ids;
  Tensor scores;  // softmax rows [N, C]
  double weight = 1.0;

  void validate() const {
    if (scores.rank() != 2 || scores.dim(0) != ids.size()) {
      throw DataError("stream " + std::string(modality_name(kind)) + " has " + std::to_string(ids.size()) +
                      " ids for scores " + shape_str(scores.shape()));
    }
    const std::size_t C = scores.dim(1);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < C; ++c) s += scores.at(i, c);
      if (std::abs(s - 1.0) > 1e-9) {
        throw DataError("stream " + std::string(modality_name(kind)) + " row '" + ids[i] +
                        "' does not sum to 1 (softmax scores expected)");
      }
    }
  }
};

/// Weighted sum of per-stream softmax scores.
inline Tensor ensemble_scores(std::span<const StreamResult> streams) {
  if (streams.empty()) throw UsageError("ensemble needs at least one stream");
  for (const StreamResult& s : streams) s.validate();
  const StreamResult& first = streams[0];
  Tensor out(first.scores.shape());
  for (const StreamResult& s : streams) {
    if (s.scores.shape() != first.scores.shape()) throw DataError("streams disagree in sample or class count");
    for (std::size_t i = 0; i < s.ids.size(); ++i) {
      if (s.ids[i] != first.ids[i]) {
        throw DataError("stream order mismatch at row " + std::to_string(i) + ": '" + s.ids[i] + "' vs '" +
                        first.ids[i] + "'");
      }
    }
    for (std::size_t k = 0; k < out.numel(); ++k) out[k] += s.weight * s.scores[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-domain transfer

struct TransferRefinement {
  RefinementParams params;
  std::vector<TextFeatureVector> text;  // one per target sample, in order
};

/// Interpolates each target sample onto the model's topology, scores it with
/// the skeleton backbone and, when given, applies frozen refinement.
inline AccuracyMap zero_shot_transfer(const MmclModel& model, const ParameterSet& params,
                                      std::span<const SkeletonSequence> target, const std::vector<std::size_t>& labels,
                                      const JointMapping& mapping,
                                      const std::shared_ptr<const GraphTopology>& source_topology,
                                      const std::optional<TransferRefinement>& refine = std::nullopt,
                                      const std::vector<std::size_t>& ks = {1, 5}) {
  if (target.empty()) throw UsageError("cannot evaluate an empty dataset");
  if (mapping.target_joint_count() != model.backbone().joints()) {
    throw DataError("mapping produces " + std::to_string(mapping.target_joint_count()) + " joints, model expects " +
                    std::to_string(model.backbone().joints()));
  }
  std::vector<SkeletonSequence> mapped;
  mapped.reserve(target.size());
  for (const SkeletonSequence& s : target) mapped.push_back(interpolate_skeleton(s, mapping, source_topology));
  Tensor scores = predict_scores(model, params, mapped);
  if (refine) scores = refine_score_rows(scores, refine->text, refine->params);
  return topk_accuracy(scores, labels, ks);
}

}  // namespace mmcl

#endif  // MMCL_TRAIN_EVALUATE_HPP
