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

// Finite-difference checks of every loss term and layer on small random
// instances. Layers are reduced to a scalar through a fixed random
// projection so all output coordinates contribute.

#ifndef MMCL_TRAIN_GRADIENT_SUITE_HPP
#define MMCL_TRAIN_GRADIENT_SUITE_HPP

#include <functional>
#include <string>
#include <vector>

#include "mmcl/autodiff/gradcheck.hpp"
#include "mmcl/backbone/gcn.hpp"
#include "mmcl/core/rng.hpp"
#include "mmcl/fam/fam.hpp"
#include "mmcl/frm/frm.hpp"
#include "mmcl/rgb/extractor.hpp"
#include "mmcl/skeleton/topology.hpp"
#include "mmcl/train/model.hpp"
#include "mmcl/train/schedule.hpp"

namespace mmcl {

struct GradientCaseResult {
  std::string name;
  std::size_t instances = 0;
  double max_rel_error = 0.0;
};

namespace suite_detail {

inline Tensor random_tensor(RandomStream& rng, Shape shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

inline std::size_t pick(RandomStream& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(static_cast<std::uint32_t>(hi - lo + 1)));
}

/// sum(y * P) for a fixed random P, a scalar touching every coordinate of y.
inline ad::Var project(ad::Tape& tape, ad::Var y, RandomStream& rng) {
  return ad::sum(ad::mul(y, tape.constant(random_tensor(rng, y.shape()))));
}

/// Moves zero-initialized tensors (biases, offsets, refinement matrices) off
/// zero; otherwise relu inputs can sit exactly on the kink, where a central
/// difference averages the two one-sided slopes.
inline void jitter(ParameterSet& params, RandomStream& rng) {
  for (auto& [name, t] : params.items()) {
    if (is_buffer(name)) continue;
    for (double& v : t.values()) v += 0.1 * rng.normal();
  }
}

using Case = std::function<ad::GradcheckResult(RandomStream&)>;

/// A tiny co-learning model on the 10-joint body, small enough that every
/// parameter coordinate can be perturbed.
inline ModelConfig tiny_model_config() {
  ModelConfig mc;
  mc.backbone.channels = {4, 5};
  mc.backbone.strides = {1, 2};
  mc.backbone.temporal_kernel = 3;
  mc.backbone.class_count = 3;
  mc.backbone.adjacency_mode = AdjacencyMode::kDynamic;
  mc.extractor.channels = {3};
  mc.align_hidden = 4;
  mc.text_dim = 3;
  mc.composite_m = 2;
  mc.crop_height = 4;
  mc.crop_width = 4;
  return mc;
}

inline std::vector<std::pair<std::string, Case>> cases() {
  std::vector<std::pair<std::string, Case>> out;

  out.emplace_back("loss/classification", [](RandomStream& rng) {
    const std::size_t N = pick(rng, 1, 4), C = pick(rng, 2, 5);
    std::vector<std::size_t> labels(N);
    for (auto& l : labels) l = rng.below(static_cast<std::uint32_t>(C));
    return ad::gradcheck([labels](ad::Tape&, ad::Var s) { return ad::cross_entropy(s, labels); },
                         random_tensor(rng, {N, C}, 2.0));
  });

  out.emplace_back("loss/contrastive", [](RandomStream& rng) {
    const std::size_t N = pick(rng, 1, 4), d = pick(rng, 2, 8);
    const ContrastiveConfig cfg{0.1};
    return ad::gradcheck(
        [cfg](ad::Tape&, std::span<const ad::Var> v) { return contrastive_loss(v[0], v[1], cfg); },
        {random_tensor(rng, {N, d}), random_tensor(rng, {N, d})});
  });

  for (bool residual : {true, false}) {
    out.emplace_back(residual ? "loss/refinement_residual" : "loss/refinement_literal", [residual](RandomStream& rng) {
      const std::size_t N = pick(rng, 1, 4), n = pick(rng, 1, 4), C = pick(rng, 2, 5);
      std::vector<std::size_t> labels(N);
      for (auto& l : labels) l = rng.below(static_cast<std::uint32_t>(C));
      const Tensor text = random_tensor(rng, {N, n});
      return ad::gradcheck(
          [=](ad::Tape& tape, std::span<const ad::Var> v) {
            return refinement_loss(refine_scores(tape.constant(text), v[0], v[1], residual), labels);
          },
          {random_tensor(rng, {n, C, C}, 0.5), random_tensor(rng, {N, C})});
    });
  }

  out.emplace_back("loss/total", [](RandomStream& rng) {
    const ModelConfig mc = tiny_model_config();
    const MmclModel model(mc, topology::body10());
    ParameterSet params = model.init(rng.next_u32());
    jitter(params, rng);
    const std::size_t N = 2, T = 4;
    const Tensor x = random_tensor(rng, {N, T, 10, 3}, 0.5);
    const Tensor images = random_tensor(rng, {N, mc.crop_height, mc.crop_width * mc.composite_m, 3});
    const Tensor text = random_tensor(rng, {N, mc.text_dim});
    const std::vector<std::size_t> labels = {rng.below(3), rng.below(3)};
    const LossWeights w{0.1, 0.2};
    std::vector<std::string> names;
    std::vector<Tensor> inputs;
    for (const auto& [name, t] : params.items()) {
      if (is_buffer(name)) continue;
      names.push_back(name);
      inputs.push_back(t);
    }
    return ad::gradcheck(
        [&](ad::Tape& tape, std::span<const ad::Var> v) {
          std::map<std::string, ad::Var> vars;
          for (std::size_t i = 0; i < names.size(); ++i) vars.emplace(names[i], v[i]);
          for (const auto& [name, t] : params.items()) {
            if (is_buffer(name)) vars.emplace(name, tape.constant(t));
          }
          const BoundParameters p(std::move(vars));
          const BackboneOutput y = model.backbone().forward(tape, p, tape.constant(x), true);
          const ad::Var fc = model.aligner().forward(p, model.extractor().forward(p, tape.constant(images)));
          const ad::Var l_c = contrastive_loss(y.pooled, fc, mc.contrastive);
          const ad::Var s_r = refine_scores(tape.constant(text), p[kRefineParam], y.scores, mc.residual_refine);
          return total_loss(ad::cross_entropy(y.scores, labels), l_c, refinement_loss(s_r, labels), w);
        },
        inputs);
  });

  out.emplace_back("layer/gcn", [](RandomStream& rng) {
    const std::size_t N = pick(rng, 1, 2), T = pick(rng, 1, 3), J = pick(rng, 1, 4), ci = pick(rng, 1, 3),
                      co = pick(rng, 1, 3), S = pick(rng, 1, 4);
    std::vector<Tensor> in;
    in.push_back(random_tensor(rng, {N, T, J, ci}));
    for (std::size_t s = 0; s < S; ++s) in.push_back(random_tensor(rng, {J, J}, 0.5));
    for (std::size_t s = 0; s < S; ++s) in.push_back(random_tensor(rng, {ci, co}));
    in.push_back(random_tensor(rng, {co}));
    const std::uint64_t seed = rng.next_u32();
    return ad::gradcheck(
        [S, seed](ad::Tape& tape, std::span<const ad::Var> v) {
          std::vector<ad::Var> adj(v.begin() + 1, v.begin() + 1 + static_cast<std::ptrdiff_t>(S));
          std::vector<ad::Var> w(v.begin() + 1 + static_cast<std::ptrdiff_t>(S), v.begin() + 1 + 2 * static_cast<std::ptrdiff_t>(S));
          RandomStream proj(seed, "projection");
          return project(tape, gcn_layer_forward(v[0], adj, w, &v[1 + 2 * S]), proj);
        },
        in);
  });

  out.emplace_back("layer/temporal_conv", [](RandomStream& rng) {
    const std::size_t N = pick(rng, 1, 2), T = pick(rng, 1, 6), J = pick(rng, 1, 3), ci = pick(rng, 1, 3),
                      co = pick(rng, 1, 3), K = 2 * pick(rng, 0, 2) + 1, stride = pick(rng, 1, 2);
    const std::uint64_t seed = rng.next_u32();
    return ad::gradcheck(
        [stride, seed](ad::Tape& tape, std::span<const ad::Var> v) {
          RandomStream proj(seed, "projection");
          return project(tape, temporal_conv_forward(v[0], v[1], stride, &v[2]), proj);
        },
        {random_tensor(rng, {N, T, J, ci}), random_tensor(rng, {K, ci, co}), random_tensor(rng, {co})});
  });

  out.emplace_back("layer/mean_pool", [](RandomStream& rng) {
    const std::size_t N = pick(rng, 1, 3), T = pick(rng, 1, 4), J = pick(rng, 1, 4), C = pick(rng, 1, 4);
    const std::uint64_t seed = rng.next_u32();
    return ad::gradcheck(
        [seed](ad::Tape& tape, ad::Var h) {
          RandomStream proj(seed, "projection");
          return project(tape, global_mean_pool(h), proj);
        },
        random_tensor(rng, {N, T, J, C}));
  });

  out.emplace_back("layer/classifier", [](RandomStream& rng) {
    const std::size_t N = pick(rng, 1, 3), D = pick(rng, 1, 5), C = pick(rng, 2, 5);
    const std::uint64_t seed = rng.next_u32();
    return ad::gradcheck(
        [seed](ad::Tape& tape, std::span<const ad::Var> v) {
          RandomStream proj(seed, "projection");
          return project(tape, classify(v[0], v[1], v[2]), proj);
        },
        {random_tensor(rng, {N, D}), random_tensor(rng, {D, C}), random_tensor(rng, {C})});
  });

  out.emplace_back("layer/batch_norm", [](RandomStream& rng) {
    const std::size_t M = pick(rng, 2, 6), C = pick(rng, 1, 4);
    const Tensor unused(Shape{C});
    std::vector<Tensor> inputs = {random_tensor(rng, {M, 2, C}), random_tensor(rng, {C}), random_tensor(rng, {C})};
    const std::uint64_t seed = rng.next_u32();
    return ad::gradcheck(
        [&](ad::Tape& tape, std::span<const ad::Var> v) {
          const ad::Var none = tape.constant(unused);
          RandomStream proj(seed, "projection");
          return project(tape, batch_norm(v[0], v[1], v[2], none, none, true), proj);
        },
        inputs);
  });

  for (bool training : {true, false}) {
    out.emplace_back(training ? "layer/backbone_train" : "layer/backbone_eval", [training](RandomStream& rng) {
      ModelConfig mc = tiny_model_config();
      const Backbone net(mc.backbone, build_adjacency_subsets(topology::body10(), AdjacencyMode::kDynamic));
      ParameterSet params;
      net.init(params, rng.next_u32());
      jitter(params, rng);
      std::vector<std::string> names;
      std::vector<Tensor> inputs{random_tensor(rng, {2, 4, 10, 3}, 0.5)};
      for (auto& [name, t] : params.items()) {
        if (is_buffer(name)) {
          for (double& x : t.values()) x = name.ends_with("var") ? rng.uniform(0.5, 2.0) : 0.3 * rng.normal();
          continue;
        }
        names.push_back(name);
        inputs.push_back(t);
      }
      const std::uint64_t seed = rng.next_u32();
      return ad::gradcheck(
          [&](ad::Tape& tape, std::span<const ad::Var> v) {
            std::map<std::string, ad::Var> vars;
            for (std::size_t i = 0; i < names.size(); ++i) vars.emplace(names[i], v[i + 1]);
            for (const auto& [name, t] : params.items()) {
              if (is_buffer(name)) vars.emplace(name, tape.constant(t));
            }
            RandomStream proj(seed, "projection");
            return project(tape, net.forward(tape, BoundParameters(std::move(vars)), v[0], training).scores, proj);
          },
          inputs);
    });
  }

  out.emplace_back("layer/rgb_extractor", [](RandomStream& rng) {
    const FeatureExtractor net(ExtractorConfig{{2, 3}, 3, 2});
    ParameterSet params;
    net.init(params, rng.next_u32());
    std::vector<std::string> names;
    std::vector<Tensor> inputs{random_tensor(rng, {pick(rng, 1, 2), pick(rng, 3, 6), pick(rng, 3, 8), 3})};
    for (const auto& [name, t] : params.items()) {
      names.push_back(name);
      inputs.push_back(t);
    }
    const std::uint64_t seed = rng.next_u32();
    return ad::gradcheck(
        [&](ad::Tape& tape, std::span<const ad::Var> v) {
          std::map<std::string, ad::Var> vars;
          for (std::size_t i = 0; i < names.size(); ++i) vars.emplace(names[i], v[i + 1]);
          RandomStream proj(seed, "projection");
          return project(tape, net.forward(BoundParameters(std::move(vars)), v[0]), proj);
        },
        inputs);
  });

  out.emplace_back("layer/aligner", [](RandomStream& rng) {
    const std::size_t in = pick(rng, 1, 5), outd = pick(rng, 1, 5);
    const FeatureAligner net(AlignConfig{in, outd, 0});
    ParameterSet params;
    net.init(params, rng.next_u32());
    std::vector<std::string> names;
    std::vector<Tensor> inputs{random_tensor(rng, {pick(rng, 1, 3), in})};
    for (const auto& [name, t] : params.items()) {
      names.push_back(name);
      inputs.push_back(t);
    }
    const std::uint64_t seed = rng.next_u32();
    return ad::gradcheck(
        [&](ad::Tape& tape, std::span<const ad::Var> v) {
          std::map<std::string, ad::Var> vars;
          for (std::size_t i = 0; i < names.size(); ++i) vars.emplace(names[i], v[i + 1]);
          RandomStream proj(seed, "projection");
          return project(tape, net.forward(BoundParameters(std::move(vars)), v[0]), proj);
        },
        inputs);
  });

  return out;
}

}  // namespace suite_detail

/// Runs every case on `instances` random draws. `on_case` sees each result as it finishes.
inline std::vector<GradientCaseResult> run_gradient_suite(
    std::size_t instances, std::uint64_t seed,
    const std::function<void(const GradientCaseResult&)>& on_case = {}) {
  std::vector<GradientCaseResult> out;
  for (const auto& [name, run] : suite_detail::cases()) {
    GradientCaseResult r{name, instances, 0.0};
    for (std::size_t i = 0; i < instances; ++i) {
      RandomStream rng(seed, "gradcheck/" + name + "/" + std::to_string(i));
      r.max_rel_error = std::max(r.max_rel_error, run(rng).max_rel_error);
    }
    if (on_case) on_case(r);
    out.push_back(r);
  }
  return out;
}

}  // namespace mmcl

#endif  // MMCL_TRAIN_GRADIENT_SUITE_HPP
