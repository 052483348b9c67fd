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

// The co-learning model: skeleton backbone, RGB extractor, aligner and the
// refinement matrices, sharing one ParameterSet. Only the backbone is needed
// at inference.

#ifndef MMCL_TRAIN_MODEL_HPP
#define MMCL_TRAIN_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstring>
#include <span>
#include <vector>

#include "mmcl/backbone/adjacency.hpp"
#include "mmcl/backbone/gcn.hpp"
#include "mmcl/core/parameters.hpp"
#include "mmcl/fam/fam.hpp"
#include "mmcl/frm/frm.hpp"
#include "mmcl/rgb/composite.hpp"
#include "mmcl/rgb/extractor.hpp"
#include "mmcl/skeleton/sequence.hpp"

namespace mmcl {

struct ModelConfig {
  BackboneConfig backbone;
  ExtractorConfig extractor;
  std::size_t align_hidden = 0;
  ContrastiveConfig contrastive;
  std::size_t text_dim = 32;
  bool residual_refine = true;
  Modality stream = Modality::kJoint;
  /// Frames resampled per sequence; 0 keeps the recorded length.
  std::size_t frames = 0;
  std::size_t composite_m = 5;
  std::size_t crop_height = 16;
  std::size_t crop_width = 16;
};

class MmclModel {
 public:
  MmclModel(ModelConfig config, const GraphTopology& topology)
      : MmclModel(config, build_adjacency_subsets(topology, config.backbone.adjacency_mode)) {}

  /// With caller-supplied subsets, e.g. a hierarchical graph with more than three.
  MmclModel(ModelConfig config, AdjacencySet adjacency)
      : config_(config),
        backbone_(config.backbone, std::move(adjacency)),
        extractor_(config.extractor),
        aligner_(AlignConfig{config.extractor.feature_dim(), config.backbone.feature_dim(), config.align_hidden}) {
    config_.contrastive.validate();
    if (config_.text_dim == 0) throw ConfigError("text feature dimension must be positive");
    if (config_.composite_m == 0 || config_.crop_height == 0 || config_.crop_width == 0) {
      throw ConfigError("composite sampling sizes must be positive");
    }
  }

  const ModelConfig& config() const noexcept { return config_; }
  const Backbone& backbone() const noexcept { return backbone_; }
  const FeatureExtractor& extractor() const noexcept { return extractor_; }
  const FeatureAligner& aligner() const noexcept { return aligner_; }
  std::size_t class_count() const noexcept { return config_.backbone.class_count; }

  ParameterSet init(std::uint64_t seed) const {
    ParameterSet p;
    backbone_.init(p, seed);
    extractor_.init(p, seed);
    aligner_.init(p, seed);
    p.init_zeros(kRefineParam, {config_.text_dim, class_count(), class_count()});
    return p;
  }

  RefinementParams refinement(const ParameterSet& p) const {
    return {p.at(kRefineParam), config_.residual_refine};
  }

 private:
  ModelConfig config_;
  Backbone backbone_;
  FeatureExtractor extractor_;
  FeatureAligner aligner_;
};

/// Root-centred modality tensor [T', J, 3] fed to the backbone.
inline Tensor skeleton_input(const SkeletonSequence& seq, const ModelConfig& config) {
  const Tensor x = derive_modality(normalize_sequence(seq), config.stream).data;
  if (config.frames == 0 || config.frames == x.dim(0)) return x;
  const std::size_t J = x.dim(1);
  Tensor out(Shape{config.frames, J, 3});
  const auto idx = uniform_sample_indices(x.dim(0), config.frames);
  for (std::size_t t = 0; t < idx.size(); ++t) {
    std::memcpy(out.data() + t * J * 3, x.data() + idx[t] * J * 3, J * 3 * sizeof(double));
  }
  return out;
}

/// Stacks equally shaped [T,J,3] inputs selected by `order` into [N,T,J,3].
inline Tensor stack_skeletons(std::span<const Tensor> inputs, std::span<const std::size_t> order) {
  if (order.empty()) throw DataError("empty skeleton batch");
  const Shape& s = inputs[order[0]].shape();
  Tensor out(Shape{order.size(), s[0], s[1], s[2]});
  const std::size_t n = shape_numel(s);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Tensor& x = inputs[order[i]];
    if (x.shape() != s) {
      throw DataError("skeleton inputs differ in shape (" + shape_str(x.shape()) + " vs " + shape_str(s) +
                      "); set data.frames to resample");
    }
    std::memcpy(out.data() + i * n, x.data(), n * sizeof(double));
  }
  return out;
}

/// Raw scores S_M [N, C] from skeletons alone.
inline Tensor predict_scores(const MmclModel& model, const ParameterSet& params,
                             std::span<const SkeletonSequence> skeletons, std::size_t chunk = 64) {
  if (skeletons.empty()) throw UsageError("no skeletons to score");
  std::vector<Tensor> inputs;
  inputs.reserve(skeletons.size());
  for (const SkeletonSequence& s : skeletons) inputs.push_back(skeleton_input(s, model.config()));
  const std::size_t C = model.class_count();
  Tensor out(Shape{skeletons.size(), C});
  for (std::size_t start = 0; start < inputs.size(); start += chunk) {
    std::vector<std::size_t> order;
    for (std::size_t i = start; i < std::min(inputs.size(), start + chunk); ++i) order.push_back(i);
    ad::Tape tape;
    BoundParameters bound(tape, params, false);
    const BackboneOutput y = model.backbone().forward(tape, bound, tape.constant(stack_skeletons(inputs, order)));
    std::copy(y.scores.value().values().begin(), y.scores.value().values().end(), out.data() + start * C);
  }
  return out;
}

/// Row-wise softmax of a plain [N, C] score matrix.
inline Tensor softmax_rows(const Tensor& scores) {
  const std::size_t N = scores.dim(0), C = scores.dim(1);
  Tensor out(scores.shape());
  for (std::size_t i = 0; i < N; ++i) {
    double m = scores.at(i, 0);
    for (std::size_t c = 1; c < C; ++c) m = std::max(m, scores.at(i, c));
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) z += out.at(i, c) = std::exp(scores.at(i, c) - m);
    for (std::size_t c = 0; c < C; ++c) out.at(i, c) /= z;
  }
  return out;
}

/// Applies refinement row by row with frozen parameters.
inline Tensor refine_score_rows(const Tensor& scores, std::span<const TextFeatureVector> text,
                                const RefinementParams& params) {
  if (text.size() != scores.dim(0)) throw DataError("refinement needs one text feature per sample");
  Tensor out(scores.shape());
  const std::size_t C = scores.dim(1);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto row = refine_scores(text[i], params, std::span<const double>(scores.data() + i * C, C));
    std::copy(row.begin(), row.end(), out.data() + i * C);
  }
  return out;
}

}  // namespace mmcl

#endif  // MMCL_TRAIN_MODEL_HPP
