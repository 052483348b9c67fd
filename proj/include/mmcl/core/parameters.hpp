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

#ifndef MMCL_CORE_PARAMETERS_HPP
#define MMCL_CORE_PARAMETERS_HPP

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "mmcl/autodiff/tape.hpp"
#include "mmcl/core/errors.hpp"
#include "mmcl/core/rng.hpp"
#include "mmcl/core/tensor.hpp"

namespace mmcl {

/// Named learnable tensors. Iteration order is lexicographic by name.
class ParameterSet {
 public:
  void set(const std::string& name, Tensor value) { params_[name] = std::move(value); }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  const Tensor& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("missing parameter '" + name + "'");
    return it->second;
  }
  Tensor& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("missing parameter '" + name + "'");
    return it->second;
  }

  const std::map<std::string, Tensor>& items() const noexcept { return params_; }
  std::map<std::string, Tensor>& items() noexcept { return params_; }
  std::size_t size() const noexcept { return params_.size(); }

  /// Gaussian init with the given std from substream "init/<name>".
  void init_normal(const std::string& name, Shape shape, double stddev, std::uint64_t seed) {
    Tensor t(std::move(shape));
    RandomStream rng(seed, "init/" + name);
    for (double& v : t.values()) v = stddev * rng.normal();
    set(name, std::move(t));
  }

  void init_zeros(const std::string& name, Shape shape) { set(name, Tensor(std::move(shape))); }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) { return a.params_ == b.params_; }

 private:
  std::map<std::string, Tensor> params_;
};

/// Running statistics stored alongside the weights; never trained.
inline bool is_buffer(const std::string& name) {
  return name.ends_with(".running_mean") || name.ends_with(".running_var");
}

/// Parameters placed on a tape as leaves (or constants when frozen).
class BoundParameters {
 public:
  BoundParameters(ad::Tape& tape, const ParameterSet& params, bool trainable = true) {
    for (const auto& [name, value] : params.items()) {
      vars_.emplace(name, trainable ? tape.leaf(value, name) : tape.constant(value));
    }
  }

  /// Wraps variables that are already on a tape.
  explicit BoundParameters(std::map<std::string, ad::Var> vars) : vars_(std::move(vars)) {}

  ad::Var operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw ConfigError("missing parameter '" + name + "'");
    return it->second;
  }

  bool contains(const std::string& name) const { return vars_.count(name) != 0; }
  const std::map<std::string, ad::Var>& items() const noexcept { return vars_; }

 private:
  std::map<std::string, ad::Var> vars_;
};

}  // namespace mmcl

#endif  // MMCL_CORE_PARAMETERS_HPP
