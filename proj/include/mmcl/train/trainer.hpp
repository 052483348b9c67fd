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

#ifndef MMCL_TRAIN_TRAINER_HPP
#define MMCL_TRAIN_TRAINER_HPP

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mmcl/core/rng.hpp"
#include "mmcl/data/dataset.hpp"
#include "mmcl/train/evaluate.hpp"
#include "mmcl/train/model.hpp"
#include "mmcl/train/schedule.hpp"

namespace mmcl {

struct TrainerConfig {
  Schedule schedule = Schedule::desk();
  LossWeights loss;
  bool frm_trainable = true;
  std::uint64_t seed = 0;
};

/// Per-sample inputs decoded once before training. Crops are cached at
/// every frame so composite sampling only picks and concatenates.
struct PreparedSample {
  std::string id;
  std::size_t label = 0;
  Tensor skeleton;  // [T, J, 3]
  std::vector<FloatImage> crops;
  std::vector<double> text;
};

struct PreparedData {
  std::vector<PreparedSample> samples;
  bool has_rgb = false;
  bool has_text = false;
};

inline PreparedData prepare_data(const Dataset& data, const ModelConfig& config, bool need_rgb, bool need_text) {
  data.validate();
  if (data.samples.empty()) throw UsageError("dataset is empty");
  PreparedData out{{}, need_rgb, need_text};
  std::vector<std::string> no_frames, no_text;
  for (const Sample& s : data.samples) {
    PreparedSample p{s.id, s.label, skeleton_input(s.skeleton, config), {}, {}};
    if (need_rgb) {
      if (!s.frames) {
        no_frames.push_back(s.id);
      } else {
        for (std::size_t i = 0; i < s.frames->frames.size(); ++i) {
          p.crops.push_back(crop_and_resize(s.frames->frames[i], s.frames->box(i), config.crop_height,
                                            config.crop_width));
        }
      }
    }
    if (need_text) {
      if (!s.text) {
        no_text.push_back(s.id);
      } else {
        if (s.text->values.size() != config.text_dim) {
          throw DataError("text feature for '" + s.id + "' has dimension " + std::to_string(s.text->values.size()) +
                          ", expected " + std::to_string(config.text_dim));
        }
        p.text = s.text->values;
      }
    }
    out.samples.push_back(std::move(p));
  }
  auto list = [](const std::vector<std::string>& ids) {
    std::string s;
    for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
    return s;
  };
  if (!no_frames.empty()) throw DataError("samples without frames: " + list(no_frames));
  if (!no_text.empty()) throw DataError("samples without text features: " + list(no_text));
  return out;
}

struct BatchRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double lr = 0.0;
  double l_cls = 0.0;
  std::optional<double> l_c;
  std::optional<double> l_r;
  double total = 0.0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double l_cls = 0.0;
  std::optional<double> l_c;
  std::optional<double> l_r;
  double total = 0.0;
  double train_top1 = 0.0;
  std::vector<BatchRecord> batches;
};

/// Called once per batch with S_M and, when the refinement branch runs, S_R.
using ScoreHook = std::function<void(const Tensor& s_m, const Tensor* s_r)>;

class Trainer {
 public:
  Trainer(const MmclModel& model, TrainerConfig config, ParameterSet params)
      : model_(model),
        config_(config),
        params_(std::move(params)),
        sgd_(config.schedule.momentum, config.schedule.weight_decay) {
    config_.schedule.validate();
    config_.loss.validate();
  }

  const ParameterSet& params() const noexcept { return params_; }
  ParameterSet& params() noexcept { return params_; }
  const TrainerConfig& config() const noexcept { return config_; }
  void set_score_hook(ScoreHook hook) { hook_ = std::move(hook); }

  bool uses_rgb() const noexcept { return config_.loss.lambda1 > 0.0; }
  bool uses_text() const noexcept { return config_.loss.lambda2 > 0.0; }

  EpochMetrics train_epoch(const PreparedData& data, std::size_t epoch) {
    if (uses_rgb() && !data.has_rgb) throw UsageError("contrastive term enabled but data was prepared without RGB");
    if (uses_text() && !data.has_text) throw UsageError("refinement term enabled but data was prepared without text");
    const double lr = lr_at(epoch, config_.schedule);
    const std::size_t n = data.samples.size(), B = config_.schedule.batch_size;
    RandomStream shuffle(config_.seed, "shuffle/" + std::to_string(epoch));
    const std::vector<std::size_t> order = shuffle.permutation(n);

    EpochMetrics m{epoch, lr, 0.0, std::nullopt, std::nullopt, 0.0, 0.0, {}};
    double sum_c = 0.0, sum_r = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0, b = 0; start < n; start += B, ++b) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + B)));
      const BatchRecord rec = [&] {
        try {
          return train_batch(data, idx, epoch, b, lr, correct);
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + " batch " +
                             std::to_string(b));
        }
      }();
      const double w = static_cast<double>(idx.size());
      m.l_cls += w * rec.l_cls;
      if (rec.l_c) sum_c += w * *rec.l_c;
      if (rec.l_r) sum_r += w * *rec.l_r;
      m.total += w * rec.total;
      m.batches.push_back(rec);
    }
    const double dn = static_cast<double>(n);
    m.l_cls /= dn;
    m.total /= dn;
    if (uses_rgb()) m.l_c = sum_c / dn;
    if (uses_text()) m.l_r = sum_r / dn;
    m.train_top1 = static_cast<double>(correct) / dn;
    return m;
  }

 private:
  BatchRecord train_batch(const PreparedData& data, const std::vector<std::size_t>& idx, std::size_t epoch,
                          std::size_t batch, double lr, std::size_t& correct) {
    const ModelConfig& mc = model_.config();
    const std::size_t N = idx.size();
    std::vector<std::size_t> labels(N);
    std::vector<Tensor> skel;
    for (std::size_t i = 0; i < N; ++i) {
      labels[i] = data.samples[idx[i]].label;
      skel.push_back(data.samples[idx[i]].skeleton);
    }
    std::vector<std::size_t> seq(N);
    for (std::size_t i = 0; i < N; ++i) seq[i] = i;

    ad::Tape tape;
    const BoundParameters p(tape, params_, true);
    const BackboneOutput y = model_.backbone().forward(tape, p, tape.constant(stack_skeletons(skel, seq)), true);
    const ad::Var l_cls = ad::cross_entropy(y.scores, labels);

    std::optional<ad::Var> l_c, l_r;
    std::optional<ad::Var> s_r;
    if (uses_rgb()) {
      std::vector<FloatImage> composites;
      for (std::size_t i : idx) {
        const PreparedSample& s = data.samples[i];
        RandomStream rng(config_.seed, "composite/" + std::to_string(epoch) + "/" + s.id);
        std::vector<FloatImage> picked;
        for (std::size_t f : uniform_sample_indices(s.crops.size(), mc.composite_m, SamplingMode::kTraining, &rng)) {
          picked.push_back(s.crops[f]);
        }
        composites.push_back(concat_temporal(picked).image);
      }
      const ad::Var fc = model_.extractor().forward(p, tape.constant(stack_images(composites)));
      l_c = contrastive_loss(y.pooled, model_.aligner().forward(p, fc), mc.contrastive);
    }
    if (uses_text()) {
      Tensor text(Shape{N, mc.text_dim});
      for (std::size_t i = 0; i < N; ++i) {
        std::copy(data.samples[idx[i]].text.begin(), data.samples[idx[i]].text.end(), text.data() + i * mc.text_dim);
      }
      s_r = refine_scores(tape.constant(std::move(text)), p[kRefineParam], y.scores, mc.residual_refine);
      l_r = refinement_loss(*s_r, labels);
    }
    if (hook_) hook_(y.scores.value(), s_r ? &s_r->value() : nullptr);

    const ad::Var total = total_loss(l_cls, l_c, l_r, config_.loss);
    tape.backward(total);

    std::map<std::string, Tensor> grads;
    for (const auto& [name, var] : p.items()) {
      if (is_buffer(name)) continue;
      if (!uses_rgb() && (name.starts_with("theta.") || name.starts_with("align."))) continue;
      if (!uses_text() && name == kRefineParam) continue;
      grads.emplace(name, var.grad());
    }
    std::set<std::string> frozen;
    if (!config_.frm_trainable) frozen.insert(kRefineParam);
    sgd_.step(params_, grads, lr, frozen);
    model_.backbone().update_running_moments(params_, y);

    const auto pred = argmax_rows(y.scores.value());
    for (std::size_t i = 0; i < N; ++i) correct += pred[i] == labels[i] ? 1 : 0;

    BatchRecord r{epoch, batch, lr, l_cls.value().item(), std::nullopt, std::nullopt, total.value().item()};
    if (l_c) r.l_c = l_c->value().item();
    if (l_r) r.l_r = l_r->value().item();
    return r;
  }

  const MmclModel& model_;
  TrainerConfig config_;
  ParameterSet params_;
  SgdOptimizer sgd_;
  ScoreHook hook_;
};

}  // namespace mmcl

#endif  // MMCL_TRAIN_TRAINER_HPP
