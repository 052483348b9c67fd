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

#ifndef MMCL_RGB_EXTRACTOR_HPP
#define MMCL_RGB_EXTRACTOR_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mmcl/autodiff/ops.hpp"
#include "mmcl/core/errors.hpp"
#include "mmcl/core/parameters.hpp"

namespace mmcl {

/// Small convolutional feature extractor for composite images:
/// conv(k, stride) -> relu per layer, then a global mean pool.
struct ExtractorConfig {
  std::vector<std::size_t> channels = {8, 16, 32};
  std::size_t kernel = 3;
  std::size_t stride = 2;

  std::size_t feature_dim() const { return channels.back(); }
  std::size_t padding() const { return kernel / 2; }

  void validate() const {
    if (channels.empty()) throw ConfigError("extractor needs at least one conv layer");
    for (std::size_t c : channels) {
      if (c == 0) throw ConfigError("extractor widths must be positive");
    }
    if (kernel == 0 || stride == 0) throw ConfigError("extractor kernel and stride must be positive");
  }
};

class FeatureExtractor {
 public:
  explicit FeatureExtractor(ExtractorConfig config) : config_(std::move(config)) { config_.validate(); }

  const ExtractorConfig& config() const noexcept { return config_; }

  static std::string layer_prefix(std::size_t l) { return "theta.conv" + std::to_string(l); }

  void init(ParameterSet& params, std::uint64_t seed) const {
    std::size_t ci = 3;
    const std::size_t k = config_.kernel;
    for (std::size_t l = 0; l < config_.channels.size(); ++l) {
      const std::size_t co = config_.channels[l];
      params.init_normal(layer_prefix(l) + ".w", {k, k, ci, co}, std::sqrt(2.0 / static_cast<double>(k * k * ci)), seed);
      params.init_zeros(layer_prefix(l) + ".b", {co});
      ci = co;
    }
  }

  /// images: [N, H, W, 3] standardized composites -> [N, feature_dim].
  ad::Var forward(const BoundParameters& p, ad::Var images) const {
    const Shape& s = images.shape();
    if (s.size() != 4 || s[3] != 3) throw DataError("extractor input must be [N,H,W,3], got " + shape_str(s));
    ad::Var h = images;
    for (std::size_t l = 0; l < config_.channels.size(); ++l) {
      h = ad::relu(ad::add(ad::conv2d(h, p[layer_prefix(l) + ".w"], config_.stride, config_.padding()),
                           p[layer_prefix(l) + ".b"]));
    }
    const Shape& hs = h.shape();
    return ad::mean_axis(ad::reshape(h, Shape{hs[0], hs[1] * hs[2], hs[3]}), 1);
  }

 private:
  ExtractorConfig config_;
};

}  // namespace mmcl

#endif  // MMCL_RGB_EXTRACTOR_HPP
