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

// mmcl: command-line front end.
//
//   mmcl [--config FILE] [--set key=value ...] <subcommand> [options]
//
// Exit status: 0 success, 1 usage or configuration error, 2 data error,
// 3 numeric error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmcl/data/synth.hpp"
#include "mmcl/io/config.hpp"
#include "mmcl/io/manifest.hpp"
#include "mmcl/io/ntu.hpp"
#include "mmcl/train/gradient_suite.hpp"
#include "mmcl/train/run.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kGradTolerance = 1e-4;

void print(const json& j) { std::cout << j.dump() << '\n'; }

int cmd_synth(const mmcl::RunConfig& cfg, const fs::path& out) {
  const mmcl::SynthData d = mmcl::synth_dataset(cfg.synth);
  const fs::path train = mmcl::io::write_dataset(d.train, out, "train");
  const fs::path test = mmcl::io::write_dataset(d.test, out, "test");
  print({{"train", train.string()}, {"test", test.string()}, {"train_samples", d.train.size()},
         {"test_samples", d.test.size()}, {"classes", cfg.synth.class_count}});
  return 0;
}

int cmd_derive(const mmcl::RunConfig& cfg, const fs::path& manifest, const fs::path& out) {
  const mmcl::Dataset ds = mmcl::io::load_dataset(manifest, {cfg.model.text_dim, false, false});
  for (const mmcl::Sample& s : ds.samples) {
    for (mmcl::Modality m : mmcl::kAllModalities) {
      mmcl::io::write_tensor(out / std::string(mmcl::modality_name(m)) / (s.id + ".mmct"),
                             mmcl::derive_modality(s.skeleton, m).data);
    }
  }
  print({{"samples", ds.size()}, {"out", out.string()}});
  return 0;
}

int cmd_train(const mmcl::RunConfig& cfg, bool quiet) {
  const auto summary = mmcl::run_training(cfg, [quiet](const json& j) {
    if (!quiet) print(j);
  });
  if (quiet && summary.test) {
    json j{{"kind", "eval"}, {"split", "test"}};
    j.update(mmcl::accuracy_json(*summary.test));
    print(j);
  }
  return 0;
}

int cmd_eval(const mmcl::RunConfig& cfg, const fs::path& checkpoint, std::string manifest) {
  if (manifest.empty()) manifest = cfg.test_manifest;
  if (manifest.empty()) throw mmcl::UsageError("eval needs --manifest or data.test");
  const mmcl::LoadedModel m = mmcl::load_model(checkpoint);
  const mmcl::EvalResult r = mmcl::run_eval(m, manifest, cfg.topk);
  const std::string stem = "scores_" + std::string(mmcl::modality_name(m.config.model.stream));
  const fs::path out(cfg.output_dir);
  mmcl::io::write_id_matrix(out / (stem + ".mmct"), out / (stem + "_ids.txt"), r.scores);
  json j{{"kind", "eval"}, {"split", "test"}, {"stream", mmcl::modality_name(m.config.model.stream)},
         {"scores", (out / (stem + ".mmct")).string()}};
  j.update(mmcl::accuracy_json(r.accuracy));
  mmcl::io::write_text_atomic(out / "eval.jsonl", j.dump() + "\n");
  print(j);
  return 0;
}

int cmd_ensemble(const mmcl::RunConfig& cfg, const std::vector<std::string>& stems, std::string manifest,
                 const std::vector<std::string>& kinds) {
  if (manifest.empty()) manifest = cfg.test_manifest;
  if (manifest.empty()) throw mmcl::UsageError("ensemble needs --manifest or data.test for labels");
  if (!cfg.ensemble_weights.empty() && cfg.ensemble_weights.size() != stems.size()) {
    throw mmcl::UsageError("ensemble.weights lists " + std::to_string(cfg.ensemble_weights.size()) +
                           " weights for " + std::to_string(stems.size()) + " streams");
  }
  std::vector<mmcl::StreamResult> streams;
  for (std::size_t i = 0; i < stems.size(); ++i) {
    mmcl::io::IdMatrix m = mmcl::io::read_id_matrix(stems[i] + ".mmct", stems[i] + "_ids.txt");
    mmcl::StreamResult s;
    s.kind = i < kinds.size() ? mmcl::parse_modality(kinds[i]) : mmcl::Modality::kJoint;
    s.ids = std::move(m.ids);
    s.scores = std::move(m.rows);
    s.weight = cfg.ensemble_weights.empty() ? 1.0 : cfg.ensemble_weights[i];
    streams.push_back(std::move(s));
  }
  const mmcl::Tensor fused = mmcl::ensemble_scores(streams);
  const mmcl::Dataset ds = mmcl::io::load_dataset(manifest, {cfg.model.text_dim, false, false});
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (i >= streams[0].ids.size() || ds.samples[i].id != streams[0].ids[i]) {
      throw mmcl::DataError("score rows do not follow the manifest order at row " + std::to_string(i));
    }
    labels.push_back(ds.samples[i].label);
  }
  if (labels.size() != streams[0].ids.size()) throw mmcl::DataError("score files and manifest differ in length");
  const fs::path out(cfg.output_dir);
  mmcl::io::write_id_matrix(out / "scores_ensemble.mmct", out / "scores_ensemble_ids.txt",
                            {streams[0].ids, fused, mmcl::io::DType::kFloat64});
  json j{{"kind", "ensemble"}, {"split", "test"}, {"streams", stems.size()}};
  j.update(mmcl::accuracy_json(mmcl::topk_accuracy(fused, labels, cfg.topk)));
  print(j);
  return 0;
}

int cmd_transfer(const mmcl::RunConfig& cfg, const fs::path& checkpoint, std::string manifest) {
  if (manifest.empty()) manifest = cfg.test_manifest;
  if (manifest.empty()) throw mmcl::UsageError("transfer needs --manifest or data.test");
  const mmcl::LoadedModel m = mmcl::load_model(checkpoint);
  const auto acc = mmcl::run_transfer(m, manifest, cfg.transfer_mapping, cfg.transfer_refine, cfg.topk);
  json j{{"kind", "transfer"}, {"split", "test"}, {"mapping", cfg.transfer_mapping}, {"refine", cfg.transfer_refine}};
  j.update(mmcl::accuracy_json(acc));
  print(j);
  return 0;
}

int cmd_gradcheck(std::size_t instances, std::uint64_t seed) {
  double worst = 0.0;
  mmcl::run_gradient_suite(instances, seed, [&](const mmcl::GradientCaseResult& r) {
    worst = std::max(worst, r.max_rel_error);
    print({{"case", r.name}, {"instances", r.instances}, {"max_rel_error", r.max_rel_error},
           {"pass", r.max_rel_error < kGradTolerance}});
  });
  print({{"max_rel_error", worst}, {"tolerance", kGradTolerance}, {"pass", worst < kGradTolerance}});
  return worst < kGradTolerance ? 0 : static_cast<int>(mmcl::ExitCode::kNumeric);
}

int cmd_convert_ntu(const std::vector<std::string>& inputs, const fs::path& out, std::size_t class_count,
                    const std::vector<std::size_t>& labels) {
  if (!labels.empty() && labels.size() != inputs.size()) {
    throw mmcl::UsageError("--labels must give one label per input file");
  }
  auto topo = std::make_shared<const mmcl::GraphTopology>(mmcl::topology::ntu25());
  mmcl::Dataset ds{topo, class_count, {}};
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const fs::path in(inputs[i]);
    const std::string id = in.stem().string();
    ds.samples.push_back(mmcl::Sample{id, labels.empty() ? 0 : labels[i],
                                      mmcl::SkeletonSequence(mmcl::io::read_ntu_skeleton(in), topo, id), {}, {}});
  }
  const fs::path manifest = mmcl::io::write_dataset(ds, out, "manifest");
  print({{"samples", ds.size()}, {"manifest", manifest.string()}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-modality co-learning for skeleton action recognition"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "Run configuration file");
  app.add_option("-s,--set", overrides, "Override a configuration key (key=value)");

  std::string out_dir, manifest, checkpoint;
  bool quiet = false;
  std::size_t instances = 20, class_count = 60;
  std::uint64_t grad_seed = 0;
  std::vector<std::string> stems, kinds, ntu_inputs;
  std::vector<std::size_t> ntu_labels;

  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic multimodal dataset");
  synth->add_option("-o,--out", out_dir, "Output directory")->required();

  auto* derive = app.add_subcommand("derive-modalities", "Write joint/bone/motion tensors for a manifest");
  derive->add_option("-m,--manifest", manifest, "Dataset manifest")->required();
  derive->add_option("-o,--out", out_dir, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train a model (writes metrics.jsonl and checkpoint/ under output.dir)");
  train->add_flag("-q,--quiet", quiet, "Only print the final evaluation");

  auto* eval = app.add_subcommand("eval", "Skeleton-only evaluation of a checkpoint");
  eval->add_option("-k,--checkpoint", checkpoint, "Checkpoint directory")->required();
  eval->add_option("-m,--manifest", manifest, "Dataset manifest (default data.test)");

  auto* ensemble = app.add_subcommand("ensemble", "Fuse exported softmax score files");
  ensemble->add_option("scores", stems, "Score files without the .mmct suffix")->required();
  ensemble->add_option("--kinds", kinds, "Stream modality per score file");
  ensemble->add_option("-m,--manifest", manifest, "Manifest providing labels (default data.test)");

  auto* transfer = app.add_subcommand("transfer", "Evaluate on another skeleton layout via joint interpolation");
  transfer->add_option("-k,--checkpoint", checkpoint, "Checkpoint directory")->required();
  transfer->add_option("-m,--manifest", manifest, "Target manifest (default data.test)");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every loss and layer");
  grad->add_option("-n,--instances", instances, "Random instances per case");
  grad->add_option("--seed", grad_seed, "Seed for the random instances");

  auto* ntu = app.add_subcommand("convert-ntu", "Convert NTU .skeleton files into a manifest");
  ntu->add_option("inputs", ntu_inputs, "NTU .skeleton files")->required();
  ntu->add_option("-o,--out", out_dir, "Output directory")->required();
  ntu->add_option("--classes", class_count, "Class count recorded in the manifest");
  ntu->add_option("--labels", ntu_labels, "Label per input file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : static_cast<int>(mmcl::ExitCode::kUsage);
  }

  try {
    std::vector<mmcl::ConfigEntry> entries;
    for (const auto& o : overrides) entries.push_back(mmcl::parse_override(o));
    const mmcl::RunConfig cfg = mmcl::load_config(config_path, entries);

    if (*synth) return cmd_synth(cfg, out_dir);
    if (*derive) return cmd_derive(cfg, manifest, out_dir);
    if (*train) return cmd_train(cfg, quiet);
    if (*eval) return cmd_eval(cfg, checkpoint, manifest);
    if (*ensemble) return cmd_ensemble(cfg, stems, manifest, kinds);
    if (*transfer) return cmd_transfer(cfg, checkpoint, manifest);
    if (*grad) return cmd_gradcheck(instances, grad_seed);
    if (*ntu) return cmd_convert_ntu(ntu_inputs, out_dir, class_count, ntu_labels);
  } catch (const mmcl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(mmcl::ExitCode::kData);
  }
  return static_cast<int>(mmcl::ExitCode::kUsage);
}
