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

// Learning-rate schedule, joint objective and the SGD update.

#ifndef MMCL_TRAIN_SCHEDULE_HPP
#define MMCL_TRAIN_SCHEDULE_HPP

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mmcl/autodiff/ops.hpp"
#include "mmcl/core/errors.hpp"
#include "mmcl/core/parameters.hpp"

namespace mmcl {

struct Schedule {
  double base_lr = 0.1;
  std::size_t epochs = 110;
  std::size_t batch_size = 200;
  std::size_t warmup_epochs = 5;
  std::vector<std::size_t> decay_epochs = {90, 100};
  double decay_factor = 10.0;
  double momentum = 0.9;
  double weight_decay = 4e-4;

  void validate() const {
    if (epochs == 0 || batch_size == 0) throw ConfigError("schedule needs positive epochs and batch size");
    if (!(base_lr >= 0.0) || !(decay_factor > 0.0) || !(momentum >= 0.0) || !(weight_decay >= 0.0)) {
      throw ConfigError("schedule rates must be nonnegative (decay factor positive)");
    }
    for (std::size_t e : decay_epochs) {
      if (e >= epochs) {
        throw ConfigError("decay epoch " + std::to_string(e) + " is not below the epoch count " +
                          std::to_string(epochs));
      }
    }
  }

  static Schedule paper() { return {}; }

  static Schedule desk() {
    Schedule s;
    s.epochs = 60;
    s.batch_size = 16;
    s.decay_epochs = {45, 55};
    return s;
  }

  static Schedule preset(std::string_view name) {
    if (name == "paper") return paper();
    if (name == "desk") return desk();
    throw ConfigError("unknown schedule preset '" + std::string(name) + "' (expected desk or paper)");
  }
};

/// Epochs are 0-based. Warmup ramps linearly to base_lr over the first
/// warmup_epochs; each decay epoch divides the rate from that epoch on.
inline double lr_at(std::size_t epoch, const Schedule& s) {
  if (epoch >= s.epochs) {
    throw UsageError("epoch " + std::to_string(epoch) + " is past the schedule (" + std::to_string(s.epochs) + ")");
  }
  if (epoch < s.warmup_epochs) {
    return s.base_lr * static_cast<double>(epoch + 1) / static_cast<double>(s.warmup_epochs);
  }
  double lr = s.base_lr;
  for (std::size_t d : s.decay_epochs) {
    if (epoch >= d) lr /= s.decay_factor;
  }
  return lr;
}

struct LossWeights {
  double lambda1 = 0.1;  // contrastive
  double lambda2 = 0.2;  // refinement

  void validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("loss weights must be nonnegative");
  }
};

namespace detail {

inline void require_finite_loss(double v, const char* component) {
  if (!std::isfinite(v)) throw NumericError(std::string("loss component ") + component + " is not finite");
}

}  // namespace detail

inline double total_loss(double l_cls, double l_c, double l_r, const LossWeights& w) {
  detail::require_finite_loss(l_cls, "L_cls");
  detail::require_finite_loss(l_c, "L_C");
  detail::require_finite_loss(l_r, "L_R");
  return l_cls + w.lambda1 * l_c + w.lambda2 * l_r;
}

/// Differentiable form. Absent terms contribute nothing.
inline ad::Var total_loss(ad::Var l_cls, std::optional<ad::Var> l_c, std::optional<ad::Var> l_r,
                          const LossWeights& w) {
  detail::require_finite_loss(l_cls.value().item(), "L_cls");
  ad::Var total = l_cls;
  if (l_c) {
    detail::require_finite_loss(l_c->value().item(), "L_C");
    total = ad::add(total, ad::scale(*l_c, w.lambda1));
  }
  if (l_r) {
    detail::require_finite_loss(l_r->value().item(), "L_R");
    total = ad::add(total, ad::scale(*l_r, w.lambda2));
  }
  return total;
}

/// SGD with momentum and coupled weight decay:
///   d = g + wd * p;  v = mu * v + d;  p -= lr * v
/// Parameters named in `frozen` and those without a gradient are left alone.
class SgdOptimizer {
 public:
  SgdOptimizer(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}

  void step(ParameterSet& params, const std::map<std::string, Tensor>& grads, double lr,
            const std::set<std::string>& frozen = {}) {
    for (auto& [name, p] : params.items()) {
      if (frozen.count(name)) continue;
      auto g = grads.find(name);
      if (g == grads.end()) continue;
      Tensor& v = velocity_.try_emplace(name, Tensor(p.shape())).first->second;
      for (std::size_t i = 0; i < p.numel(); ++i) {
        const double d = g->second[i] + weight_decay_ * p[i];
        v[i] = momentum_ * v[i] + d;
        p[i] -= lr * v[i];
      }
    }
  }

  const std::map<std::string, Tensor>& velocity() const noexcept { return velocity_; }
  std::map<std::string, Tensor>& velocity() noexcept { return velocity_; }

 private:
  double momentum_;
  double weight_decay_;
  std::map<std::string, Tensor> velocity_;
};

}  // namespace mmcl

#endif  // MMCL_TRAIN_SCHEDULE_HPP
