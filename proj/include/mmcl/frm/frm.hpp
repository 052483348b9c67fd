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

// Score refinement from text features.
//
// For a text feature f in R^n and learnable C x C matrices M_1..M_n:
//   R   = sum_i f_i M_i
//   S_R = S_M + R S_M     (residual, default)
//   S_R = R S_M           (literal)
// The refinement loss is the cross-entropy of softmax(S_R) against the label.

#ifndef MMCL_FRM_FRM_HPP
#define MMCL_FRM_FRM_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mmcl/autodiff/ops.hpp"
#include "mmcl/core/errors.hpp"
#include "mmcl/core/parameters.hpp"
#include "mmcl/core/tensor.hpp"

namespace mmcl {

struct TextFeatureVector {
  std::vector<double> values;
  std::string sample_id;
};

/// Truncates or zero-pads to n, then scales to unit L2 norm. An all-zero
/// vector stays zero.
inline TextFeatureVector unify_text_features(std::span<const double> raw, std::size_t n, std::string sample_id = {}) {
  if (raw.empty()) throw DataError("text feature for '" + sample_id + "' is empty");
  if (n == 0) throw ConfigError("text feature dimension must be positive");
  TextFeatureVector out{std::vector<double>(n, 0.0), std::move(sample_id)};
  for (std::size_t i = 0; i < std::min(n, raw.size()); ++i) out.values[i] = raw[i];
  double ss = 0.0;
  for (double v : out.values) ss += v * v;
  if (!std::isfinite(ss)) throw DataError("text feature for '" + out.sample_id + "' is not finite");
  if (ss > 0.0) {
    const double norm = std::sqrt(ss);
    for (double& v : out.values) v /= norm;
  }
  return out;
}

struct RefinementParams {
  Tensor matrices;  // [n, C, C]
  bool residual = true;

  std::size_t text_dim() const { return matrices.dim(0); }
  std::size_t classes() const { return matrices.dim(1); }

  static RefinementParams zeros(std::size_t n, std::size_t classes, bool residual = true) {
    return {Tensor(Shape{n, classes, classes}), residual};
  }
};

inline constexpr const char* kRefineParam = "frm.m";

/// Refined scores for one sample.
inline std::vector<double> refine_scores(const TextFeatureVector& text, const RefinementParams& params,
                                         std::span<const double> scores) {
  const Tensor& M = params.matrices;
  if (M.rank() != 3 || M.dim(1) != M.dim(2)) throw ConfigError("refinement matrices must be [n,C,C]");
  const std::size_t n = M.dim(0), C = M.dim(1);
  if (text.values.size() != n || scores.size() != C) {
    throw ConfigError("refinement expects text dim " + std::to_string(n) + " and " + std::to_string(C) +
                      " classes, got " + std::to_string(text.values.size()) + " and " + std::to_string(scores.size()));
  }
  std::vector<double> R(C * C, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < C * C; ++k) R[k] += text.values[i] * M[i * C * C + k];
  std::vector<double> out(C, 0.0);
  for (std::size_t r = 0; r < C; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c) s += R[r * C + c] * scores[c];
    out[r] = params.residual ? scores[r] + s : s;
  }
  return out;
}

/// Batched, differentiable form: text [N,n], matrices [n,C,C], scores [N,C] -> [N,C].
inline ad::Var refine_scores(ad::Var text, ad::Var matrices, ad::Var scores, bool residual) {
  const Shape& ts = text.shape();
  const Shape& ms = matrices.shape();
  const Shape& ss = scores.shape();
  if (ts.size() != 2 || ms.size() != 3 || ss.size() != 2 || ms[1] != ms[2] || ts[1] != ms[0] || ss[1] != ms[1] ||
      ts[0] != ss[0]) {
    throw ConfigError("refinement shapes do not line up: text " + shape_str(ts) + ", matrices " + shape_str(ms) +
                      ", scores " + shape_str(ss));
  }
  const std::size_t N = ss[0], n = ms[0], C = ms[1];
  ad::Var R = ad::reshape(ad::matmul(text, ad::reshape(matrices, Shape{n, C * C})), Shape{N, C, C});
  ad::Var RS = ad::reshape(ad::bmm(R, ad::reshape(scores, Shape{N, C, 1})), Shape{N, C});
  return residual ? ad::add(scores, RS) : RS;
}

/// Mean cross-entropy of softmax(refined) against the labels.
inline ad::Var refinement_loss(ad::Var refined, const std::vector<std::size_t>& labels) {
  return ad::cross_entropy(refined, labels);
}

}  // namespace mmcl

#endif  // MMCL_FRM_FRM_HPP
