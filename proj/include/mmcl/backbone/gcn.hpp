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

// Spatial-temporal GCN backbone.
//
// Block l:  G  = relu( sum_s  A_s H W_s  + b_g )        spatial, per frame
//           H' = relu( tconv(G) + b_t + residual(H) )   temporal, per joint
// where A_s is the normalized subset s (plus a learnable offset in dynamic
// mode). After the last block features are mean-pooled over frames and
// joints into F_g and mapped to raw class scores by an affine head.

#ifndef MMCL_BACKBONE_GCN_HPP
#define MMCL_BACKBONE_GCN_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mmcl/autodiff/ops.hpp"
#include "mmcl/backbone/adjacency.hpp"
#include "mmcl/core/errors.hpp"
#include "mmcl/core/parameters.hpp"

namespace mmcl {

struct BackboneConfig {
  std::vector<std::size_t> channels = {16, 16, 32, 32};
  /// Temporal stride per block; empty means stride 1 everywhere.
  std::vector<std::size_t> strides = {};
  std::size_t temporal_kernel = 5;
  std::size_t input_channels = 3;
  std::size_t class_count = 0;
  AdjacencyMode adjacency_mode = AdjacencyMode::kStatic;
  /// Normalization after the graph and temporal convolutions of each block.
  bool batch_norm = true;
  double batch_norm_momentum = 0.1;

  std::size_t stride(std::size_t block) const { return strides.empty() ? 1 : strides.at(block); }
  std::size_t feature_dim() const { return channels.back(); }

  void validate() const {
    if (channels.empty()) throw ConfigError("backbone needs at least one block");
    for (std::size_t c : channels) {
      if (c == 0) throw ConfigError("backbone channel widths must be positive");
    }
    if (!strides.empty() && strides.size() != channels.size()) {
      throw ConfigError("backbone strides must list one entry per block");
    }
    for (std::size_t s : strides) {
      if (s == 0) throw ConfigError("backbone strides must be positive");
    }
    if (temporal_kernel == 0 || temporal_kernel % 2 == 0) {
      throw ConfigError("temporal kernel size must be odd, got " + std::to_string(temporal_kernel));
    }
    if (input_channels == 0) throw ConfigError("input channel count must be positive");
    if (class_count == 0) throw ConfigError("class count must be positive");
    if (!(batch_norm_momentum >= 0.0 && batch_norm_momentum <= 1.0)) {
      throw ConfigError("batch norm momentum must lie in [0, 1]");
    }
  }
};

// ---------------------------------------------------------------------------
// Layer-level forwards. Feature maps are [N, T, J, C].

/// sum_s adj[s] H weights[s], before any bias or activation.
inline ad::Var gcn_aggregate(ad::Var h, const std::vector<ad::Var>& adj, const std::vector<ad::Var>& weights) {
  if (adj.empty() || adj.size() != weights.size()) {
    throw DataError("gcn layer: " + std::to_string(adj.size()) + " adjacency subsets but " +
                    std::to_string(weights.size()) + " weight matrices");
  }
  ad::Var acc = ad::linear(ad::graph_mix(adj[0], h), weights[0]);
  for (std::size_t s = 1; s < adj.size(); ++s) acc = ad::add(acc, ad::linear(ad::graph_mix(adj[s], h), weights[s]));
  return acc;
}

/// relu(sum_s adj[s] H weights[s] + bias); bias may be omitted.
inline ad::Var gcn_layer_forward(ad::Var h, const std::vector<ad::Var>& adj, const std::vector<ad::Var>& weights,
                                 const ad::Var* bias = nullptr) {
  ad::Var acc = gcn_aggregate(h, adj, weights);
  if (bias) acc = ad::add(acc, *bias);
  return ad::relu(acc);
}

struct ChannelMoments {
  Tensor mean;
  Tensor var;
};

inline constexpr double kBatchNormEps = 1e-5;

/// Per-channel normalization over every axis but the last, then weight and
/// bias. Training uses the batch moments (reported through `batch`);
/// evaluation uses the running ones.
inline ad::Var batch_norm(ad::Var x, ad::Var weight, ad::Var bias, ad::Var running_mean, ad::Var running_var,
                          bool training, ChannelMoments* batch = nullptr) {
  const Shape s = x.shape();
  const std::size_t C = s.back(), M = shape_numel(s) / C;
  if (M == 0) throw DataError("batch_norm on an empty map");
  ad::Var f = ad::reshape(x, Shape{M, C});
  ad::Var y;
  if (training) {
    const ad::Var mu = ad::mean_axis(f, 0, true);
    const ad::Var xc = ad::sub(f, mu);
    const ad::Var var = ad::mean_axis(ad::mul(xc, xc), 0, true);
    y = ad::mul(xc, ad::rsqrt(ad::add_scalar(var, kBatchNormEps)));
    if (batch) *batch = {mu.value().reshaped({C}), var.value().reshaped({C})};
  } else {
    y = ad::mul(ad::sub(f, running_mean), ad::rsqrt(ad::add_scalar(running_var, kBatchNormEps)));
  }
  return ad::reshape(ad::add(ad::mul(y, weight), bias), s);
}

/// Same-padded temporal convolution plus optional bias; no activation.
inline ad::Var temporal_conv_forward(ad::Var h, ad::Var kernel, std::size_t stride = 1, const ad::Var* bias = nullptr) {
  ad::Var y = ad::temporal_conv(h, kernel, stride);
  return bias ? ad::add(y, *bias) : y;
}

/// Mean over frames and joints: [N,T,J,C] -> [N,C].
inline ad::Var global_mean_pool(ad::Var h) {
  const Shape& s = h.shape();
  if (s.size() != 4 || s[1] * s[2] == 0) throw DataError("global_mean_pool needs a nonempty [N,T,J,C] map");
  return ad::mean_axis(ad::reshape(h, Shape{s[0], s[1] * s[2], s[3]}), 1);
}

/// Raw class scores: F_g [N,D] x W [D,C] + b [C].
inline ad::Var classify(ad::Var features, ad::Var weight, ad::Var bias) {
  if (features.shape().size() != 2 || weight.shape().size() != 2 || features.shape()[1] != weight.shape()[0] ||
      bias.shape().size() != 1 || bias.shape()[0] != weight.shape()[1]) {
    throw ConfigError("classifier head " + shape_str(weight.shape()) + " does not fit features " +
                      shape_str(features.shape()));
  }
  return ad::add(ad::matmul(features, weight), bias);
}

// ---------------------------------------------------------------------------

struct BackboneOutput {
  ad::Var features;  // last block output [N,T',J,C]
  ad::Var pooled;    // F_g [N,C]
  ad::Var scores;    // S_M [N,classes]
  /// Training only: batch moments keyed by the normalization layer prefix.
  std::map<std::string, ChannelMoments> moments;
};

/// Parameter naming and the full skeleton forward pass.
class Backbone {
 public:
  Backbone(BackboneConfig config, AdjacencySet adjacency) : config_(std::move(config)), adj_(std::move(adjacency)) {
    config_.validate();
    if (adj_.size() == 0) throw ConfigError("backbone needs adjacency subsets");
    adj_.mode = config_.adjacency_mode;
  }

  const BackboneConfig& config() const noexcept { return config_; }
  const AdjacencySet& adjacency() const noexcept { return adj_; }
  std::size_t joints() const { return adj_.joints(); }

  static std::string block_prefix(std::size_t l) { return "backbone.block" + std::to_string(l); }

  bool has_residual(std::size_t l) const { return l > 0; }
  bool residual_projects(std::size_t l) const {
    return has_residual(l) && (in_channels(l) != config_.channels[l] || config_.stride(l) != 1);
  }
  std::size_t in_channels(std::size_t l) const { return l == 0 ? config_.input_channels : config_.channels[l - 1]; }

  void init(ParameterSet& params, std::uint64_t seed) const {
    const std::size_t S = adj_.size(), K = config_.temporal_kernel;
    for (std::size_t l = 0; l < config_.channels.size(); ++l) {
      const std::string p = block_prefix(l);
      const std::size_t ci = in_channels(l), co = config_.channels[l];
      for (std::size_t s = 0; s < S; ++s) {
        params.init_normal(p + ".gcn.w" + std::to_string(s), {ci, co},
                           std::sqrt(2.0 / static_cast<double>(ci * S)), seed);
        if (config_.adjacency_mode == AdjacencyMode::kDynamic) {
          params.init_zeros(p + ".adj" + std::to_string(s), {joints(), joints()});
        }
      }
      params.init_normal(p + ".tcn.w", {K, co, co}, std::sqrt(2.0 / static_cast<double>(K * co)), seed);
      for (const char* part : {".gcn", ".tcn"}) {
        const std::string q = p + part;
        if (config_.batch_norm) {
          params.set(q + ".bn.weight", Tensor(Shape{co}, 1.0));
          params.init_zeros(q + ".bn.bias", {co});
          params.init_zeros(q + ".bn.running_mean", {co});
          params.set(q + ".bn.running_var", Tensor(Shape{co}, 1.0));
        } else {
          params.init_zeros(q + ".b", {co});
        }
      }
      if (residual_projects(l)) {
        params.init_normal(p + ".res.w", {1, ci, co}, std::sqrt(2.0 / static_cast<double>(ci)), seed);
      }
    }
    const std::size_t d = config_.feature_dim();
    params.init_normal("head.w", {d, config_.class_count}, std::sqrt(1.0 / static_cast<double>(d)), seed);
    params.init_zeros("head.b", {config_.class_count});
  }

  /// x: [N, T, J, input_channels]. Training switches normalization to batch moments.
  BackboneOutput forward(ad::Tape& tape, const BoundParameters& p, ad::Var x, bool training = false) const {
    const Shape& xs = x.shape();
    if (xs.size() != 4 || xs[2] != joints() || xs[3] != config_.input_channels) {
      throw DataError("backbone input " + shape_str(xs) + " does not match " + std::to_string(joints()) +
                      " joints x " + std::to_string(config_.input_channels) + " channels");
    }
    std::vector<ad::Var> base;
    for (const Tensor& a : adj_.normalized) base.push_back(tape.constant(a));

    BackboneOutput out;
    auto finish = [&](ad::Var y, const std::string& q) {
      if (!config_.batch_norm) return ad::add(y, p[q + ".b"]);
      ChannelMoments m;
      y = batch_norm(y, p[q + ".bn.weight"], p[q + ".bn.bias"], p[q + ".bn.running_mean"],
                     p[q + ".bn.running_var"], training, &m);
      if (training) out.moments.emplace(q + ".bn", std::move(m));
      return y;
    };

    ad::Var h = x;
    for (std::size_t l = 0; l < config_.channels.size(); ++l) {
      const std::string pre = block_prefix(l);
      std::vector<ad::Var> adj, w;
      for (std::size_t s = 0; s < adj_.size(); ++s) {
        const std::string ss = std::to_string(s);
        adj.push_back(config_.adjacency_mode == AdjacencyMode::kDynamic ? ad::add(base[s], p[pre + ".adj" + ss])
                                                                        : base[s]);
        w.push_back(p[pre + ".gcn.w" + ss]);
      }
      const ad::Var g = ad::relu(finish(gcn_aggregate(h, adj, w), pre + ".gcn"));
      ad::Var y = finish(ad::temporal_conv(g, p[pre + ".tcn.w"], config_.stride(l)), pre + ".tcn");
      if (has_residual(l)) {
        y = ad::add(y, residual_projects(l) ? ad::temporal_conv(h, p[pre + ".res.w"], config_.stride(l)) : h);
      }
      h = ad::relu(y);
    }
    out.features = h;
    out.pooled = global_mean_pool(h);
    out.scores = classify(out.pooled, p["head.w"], p["head.b"]);
    return out;
  }

  /// Folds the batch moments of a training forward into the running ones.
  void update_running_moments(ParameterSet& params, const BackboneOutput& out) const {
    const double m = config_.batch_norm_momentum;
    for (const auto& [prefix, moments] : out.moments) {
      Tensor& mean = params.at(prefix + ".running_mean");
      Tensor& var = params.at(prefix + ".running_var");
      for (std::size_t c = 0; c < mean.numel(); ++c) {
        mean[c] = (1.0 - m) * mean[c] + m * moments.mean[c];
        var[c] = (1.0 - m) * var[c] + m * moments.var[c];
      }
    }
  }

 private:
  BackboneConfig config_;
  AdjacencySet adj_;
};

}  // namespace mmcl

#endif  // MMCL_BACKBONE_GCN_HPP
