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

// Feature alignment between RGB and skeleton embeddings.
//
// RGB features are projected into the skeleton feature space by a two-layer
// MLP. The contrastive loss for a batch of N aligned pairs (g_i, c_i) is
//
//   L_C = -1/(2N) sum_i [ l(g_i, c_i) + l(c_i, g_i) ]
//   l(a_i, b_i) = log( e^{s(a_i,b_i)/tau} /
//                      ( e^{s(a_i,b_i)/tau}
//                        + sum_{k != i} e^{s(a_i,b_k)/tau} + e^{s(a_i,a_k)/tau} ) )
//
// with s the cosine similarity. The leading minus makes the loss a quantity
// to minimize; it is >= 0 and equals 0 for N = 1.

#ifndef MMCL_FAM_FAM_HPP
#define MMCL_FAM_FAM_HPP

#include <cmath>
#include <cstdint>
#include <string>

#include "mmcl/autodiff/ops.hpp"
#include "mmcl/core/errors.hpp"
#include "mmcl/core/parameters.hpp"

namespace mmcl {

struct AlignConfig {
  std::size_t input_dim = 32;
  std::size_t output_dim = 32;
  std::size_t hidden_dim = 0;  // 0 means 2 * output_dim

  std::size_t hidden() const { return hidden_dim == 0 ? 2 * output_dim : hidden_dim; }
};

class FeatureAligner {
 public:
  explicit FeatureAligner(AlignConfig config) : config_(config) {
    if (config_.input_dim == 0 || config_.output_dim == 0) throw ConfigError("align dimensions must be positive");
  }

  const AlignConfig& config() const noexcept { return config_; }

  void init(ParameterSet& params, std::uint64_t seed) const {
    const std::size_t in = config_.input_dim, hid = config_.hidden(), out = config_.output_dim;
    params.init_normal("align.w1", {in, hid}, std::sqrt(2.0 / static_cast<double>(in)), seed);
    params.init_zeros("align.b1", {hid});
    params.init_normal("align.w2", {hid, out}, std::sqrt(1.0 / static_cast<double>(hid)), seed);
    params.init_zeros("align.b2", {out});
  }

  /// [N, input_dim] -> [N, output_dim]
  ad::Var forward(const BoundParameters& p, ad::Var cnn_features) const {
    const Shape& s = cnn_features.shape();
    if (s.size() != 2 || s[1] != config_.input_dim) {
      throw ConfigError("align input " + shape_str(s) + " does not match extractor dim " +
                        std::to_string(config_.input_dim));
    }
    ad::Var h = ad::relu(ad::add(ad::matmul(cnn_features, p["align.w1"]), p["align.b1"]));
    return ad::add(ad::matmul(h, p["align.w2"]), p["align.b2"]);
  }

 private:
  AlignConfig config_;
};

struct ContrastiveConfig {
  double temperature = 0.1;

  void validate() const {
    if (!(temperature > 0.0)) throw ConfigError("contrastive temperature must be positive");
  }
};

namespace detail {

/// Stand-in for -inf on excluded logits; exp underflows to exactly 0.
inline constexpr double kMaskedLogit = -1e30;

/// sum_i l(a_i, b_i) for one direction, evaluated as a masked log-softmax over
/// the 2N candidates [s(a_i, b_1..N), s(a_i, a_1..N)] with s(a_i, a_i) excluded.
inline ad::Var directional_log_terms(ad::Var a_unit, ad::Var b_unit, double tau) {
  ad::Tape& tape = *a_unit.tape;
  const std::size_t n = a_unit.shape()[0];
  Tensor self_mask(Shape{n, n});
  Tensor pick(Shape{n, 2 * n});
  for (std::size_t i = 0; i < n; ++i) {
    self_mask.at(i, i) = kMaskedLogit;
    pick.at(i, i) = 1.0;
  }
  ad::Var cross = ad::scale(ad::matmul(a_unit, ad::transpose(b_unit)), 1.0 / tau);
  ad::Var intra = ad::add(ad::scale(ad::matmul(a_unit, ad::transpose(a_unit)), 1.0 / tau),
                          tape.constant(std::move(self_mask)));
  ad::Var logp = ad::log_softmax(ad::concat_cols(cross, intra));
  return ad::sum(ad::mul(logp, tape.constant(std::move(pick))));
}

}  // namespace detail

/// Bidirectional contrastive loss over paired rows of F_g and F_c ([N, d]).
inline ad::Var contrastive_loss(ad::Var skeleton, ad::Var rgb, const ContrastiveConfig& config) {
  config.validate();
  const Shape& gs = skeleton.shape();
  if (gs.size() != 2 || gs != rgb.shape() || gs[0] == 0) {
    throw DataError("contrastive loss needs equal nonempty [N,d] batches, got " + shape_str(gs) + " and " +
                    shape_str(rgb.shape()));
  }
  const ad::Var g = ad::normalize_rows(skeleton);
  const ad::Var c = ad::normalize_rows(rgb);
  const ad::Var total = ad::add(detail::directional_log_terms(g, c, config.temperature),
                                detail::directional_log_terms(c, g, config.temperature));
  return ad::scale(total, -1.0 / (2.0 * static_cast<double>(gs[0])));
}

/// Loss value for plain tensors.
inline double contrastive_loss_value(const Tensor& skeleton, const Tensor& rgb, const ContrastiveConfig& config) {
  ad::Tape tape;
  return contrastive_loss(tape.constant(skeleton), tape.constant(rgb), config).value().item();
}

}  // namespace mmcl

#endif  // MMCL_FAM_FAM_HPP
