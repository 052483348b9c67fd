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

// File-level workflows behind the command-line tool: train to a run
// directory, evaluate a checkpoint, fuse exported scores, transfer across
// skeleton layouts.
//
// A run directory contains
//   metrics.jsonl          one JSON record per batch, per epoch and per evaluation
//   checkpoint/            weights (see io/checkpoint.hpp) plus topology.json

#ifndef MMCL_TRAIN_RUN_HPP
#define MMCL_TRAIN_RUN_HPP

#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmcl/io/checkpoint.hpp"
#include "mmcl/io/config.hpp"
#include "mmcl/io/manifest.hpp"
#include "mmcl/io/text_features.hpp"
#include "mmcl/train/evaluate.hpp"
#include "mmcl/train/trainer.hpp"

namespace mmcl {

namespace fs = std::filesystem;

inline MmclModel build_model(const RunConfig& cfg, const GraphTopology& topology, std::size_t class_count) {
  ModelConfig mc = cfg.model;
  mc.backbone.class_count = class_count;
  if (cfg.adjacency_file.empty()) return MmclModel(mc, topology);
  const Tensor a = io::read_tensor(cfg.adjacency_file).tensor;
  const std::size_t J = topology.joint_count();
  if (a.rank() != 3 || a.dim(1) != J || a.dim(2) != J) {
    throw DataError(cfg.adjacency_file + ": adjacency subsets must be [S," + std::to_string(J) + "," +
                    std::to_string(J) + "], got " + shape_str(a.shape()));
  }
  std::vector<Tensor> subsets;
  for (std::size_t s = 0; s < a.dim(0); ++s) {
    subsets.emplace_back(Shape{J, J}, std::vector<double>(a.data() + s * J * J, a.data() + (s + 1) * J * J));
  }
  return MmclModel(mc, make_adjacency_set(std::move(subsets), mc.backbone.adjacency_mode));
}

inline nlohmann::json accuracy_json(const AccuracyMap& acc) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : acc) j["top" + std::to_string(k)] = v;
  return j;
}

inline nlohmann::json batch_json(const BatchRecord& r) {
  nlohmann::json j{{"kind", "batch"}, {"split", "train"}, {"epoch", r.epoch}, {"batch", r.batch},
                   {"lr", r.lr},      {"l_cls", r.l_cls}};
  if (r.l_c) j["l_c"] = *r.l_c;
  if (r.l_r) j["l_r"] = *r.l_r;
  j["loss"] = r.total;
  return j;
}

inline nlohmann::json epoch_json(const EpochMetrics& m) {
  nlohmann::json j{{"kind", "epoch"}, {"split", "train"}, {"epoch", m.epoch}, {"lr", m.lr}, {"l_cls", m.l_cls}};
  if (m.l_c) j["l_c"] = *m.l_c;
  if (m.l_r) j["l_r"] = *m.l_r;
  j["loss"] = m.total;
  j["top1"] = m.train_top1;
  return j;
}

struct TrainSummary {
  std::vector<EpochMetrics> epochs;
  std::optional<AccuracyMap> test;
  fs::path metrics_path;
  fs::path checkpoint_dir;
};

using ProgressFn = std::function<void(const nlohmann::json&)>;

inline TrainSummary run_training(const RunConfig& cfg, const ProgressFn& progress = {}) {
  if (cfg.train_manifest.empty()) throw UsageError("data.train is not set");
  const TrainerConfig& tc = cfg.trainer;
  const bool rgb = tc.loss.lambda1 > 0.0, text = tc.loss.lambda2 > 0.0;
  const Dataset train = io::load_dataset(cfg.train_manifest, {cfg.model.text_dim, rgb, text});
  const MmclModel model = build_model(cfg, *train.topology, train.class_count);
  const PreparedData prepared = prepare_data(train, model.config(), rgb, text);

  Trainer trainer(model, tc, model.init(tc.seed));
  TrainSummary out;
  std::string lines;
  auto emit = [&](const nlohmann::json& j) {
    lines += j.dump() + "\n";
    if (progress) progress(j);
  };
  for (std::size_t e = 0; e < tc.schedule.epochs; ++e) {
    EpochMetrics m = trainer.train_epoch(prepared, e);
    for (const BatchRecord& b : m.batches) lines += batch_json(b).dump() + "\n";
    emit(epoch_json(m));
    out.epochs.push_back(std::move(m));
  }
  if (!cfg.test_manifest.empty()) {
    const Dataset test = io::load_dataset(cfg.test_manifest, {cfg.model.text_dim, false, false});
    const auto skeletons = test.skeletons();
    out.test = evaluate_topk(model, trainer.params(), skeletons, test.labels(), cfg.topk);
    nlohmann::json j{{"kind", "eval"}, {"split", "test"}, {"epoch", tc.schedule.epochs}};
    j.update(accuracy_json(*out.test));
    emit(j);
  }

  const fs::path dir(cfg.output_dir);
  out.checkpoint_dir = dir / "checkpoint";
  io::save_checkpoint(out.checkpoint_dir, trainer.params(), config_to_text(cfg));
  io::write_text_atomic(out.checkpoint_dir / "topology.json", io::topology_to_json(*train.topology).dump() + "\n");
  out.metrics_path = dir / "metrics.jsonl";
  io::write_text_atomic(out.metrics_path, lines);
  return out;
}

/// A trained model restored from a checkpoint directory.
struct LoadedModel {
  RunConfig config;  // as trained
  std::shared_ptr<const GraphTopology> topology;
  MmclModel model;
  ParameterSet params;
};

inline LoadedModel load_model(const fs::path& checkpoint_dir) {
  io::Checkpoint ck = io::load_checkpoint(checkpoint_dir);
  RunConfig cfg;
  apply_config(cfg, parse_config_text(ck.config_text, (checkpoint_dir / "config.txt").string()));
  const auto topo_bytes = io::read_file(checkpoint_dir / "topology.json");
  auto topo = std::make_shared<const GraphTopology>(
      io::topology_from_json(nlohmann::json::parse(topo_bytes.begin(), topo_bytes.end())));
  const std::size_t classes = ck.params.at("head.b").dim(0);
  MmclModel model = build_model(cfg, *topo, classes);
  return {std::move(cfg), std::move(topo), std::move(model), std::move(ck.params)};
}

struct EvalResult {
  AccuracyMap accuracy;
  io::IdMatrix scores;  // softmax rows
};

/// Skeleton-only evaluation of `manifest`; softmax scores are kept for ensembling.
inline EvalResult run_eval(const LoadedModel& m, const fs::path& manifest, const std::vector<std::size_t>& topk) {
  const Dataset ds = io::load_dataset(manifest, {m.config.model.text_dim, false, false});
  if (!(*ds.topology == *m.topology)) throw DataError(manifest.string() + ": topology differs from the model's");
  const auto skeletons = ds.skeletons();
  const Tensor raw = predict_scores(m.model, m.params, skeletons);
  EvalResult out{topk_accuracy(raw, ds.labels(), topk), {{}, softmax_rows(raw), io::DType::kFloat64}};
  for (const Sample& s : ds.samples) out.scores.ids.push_back(s.id);
  return out;
}

/// "identity", "linear", or a file with one line per model joint listing
/// "source:weight" pairs over the target dataset's joints.
inline JointMapping resolve_mapping(const std::string& spec, std::size_t target_joints, std::size_t model_joints) {
  if (spec == "identity") {
    if (target_joints != model_joints) {
      throw DataError("identity mapping needs equal joint counts (" + std::to_string(target_joints) + " vs " +
                      std::to_string(model_joints) + ")");
    }
    return JointMapping::identity(model_joints);
  }
  if (spec == "linear") return JointMapping::linear(target_joints, model_joints);
  const auto bytes = io::read_file(spec);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<std::vector<WeightedJoint>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::vector<WeightedJoint> row;
    std::string tok;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw DataError(spec + ": expected source:weight, got '" + tok + "'");
      try {
        row.push_back({std::stoul(tok.substr(0, colon)), std::stod(tok.substr(colon + 1))});
      } catch (const std::exception&) {
        throw DataError(spec + ": bad entry '" + tok + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return JointMapping(target_joints, std::move(rows));
}

inline AccuracyMap run_transfer(const LoadedModel& m, const fs::path& manifest, const std::string& mapping_spec,
                                bool refine, const std::vector<std::size_t>& topk) {
  const Dataset ds = io::load_dataset(manifest, {m.config.model.text_dim, false, refine});
  const JointMapping mapping = resolve_mapping(mapping_spec, ds.topology->joint_count(), m.topology->joint_count());
  std::optional<TransferRefinement> r;
  if (refine) {
    r = TransferRefinement{m.model.refinement(m.params), {}};
    for (const Sample& s : ds.samples) {
      if (!s.text) throw DataError("transfer refinement needs a text feature for '" + s.id + "'");
      r->text.push_back(*s.text);
    }
  }
  const auto skeletons = ds.skeletons();
  return zero_shot_transfer(m.model, m.params, skeletons, ds.labels(), mapping, m.topology, r, topk);
}

}  // namespace mmcl

#endif  // MMCL_TRAIN_RUN_HPP
