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

// Run configuration: flat "section.key = value" lines, '#' starts a comment.
// Lists are comma separated. train.preset is applied before any other key,
// wherever it appears, so explicit train.* keys refine the preset.

#ifndef MMCL_IO_CONFIG_HPP
#define MMCL_IO_CONFIG_HPP

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mmcl/core/errors.hpp"
#include "mmcl/data/synth.hpp"
#include "mmcl/io/container.hpp"
#include "mmcl/train/trainer.hpp"

namespace mmcl {

struct RunConfig {
  std::string train_manifest;
  std::string test_manifest;
  ModelConfig model;
  TrainerConfig trainer;
  std::string preset = "desk";
  std::string output_dir = "run";
  std::vector<std::size_t> topk = {1, 5};
  std::vector<double> ensemble_weights;  // empty means equal weights
  std::string transfer_mapping = "identity";
  bool transfer_refine = false;
  /// Optional [S, J, J] tensor of adjacency subsets replacing the topology-derived ones.
  std::string adjacency_file;
  SynthSpec synth;
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

inline std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v)) out.push_back(to_size(key, item));
  return out;
}

inline std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (const T& x : xs) {
    if (!s.empty()) s += ",";
    if constexpr (std::is_floating_point_v<T>) s += fmt(x);
    else s += std::to_string(x);
  }
  return s;
}

struct Field {
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MMCL_SIZE_FIELD(member) \
  {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_size(k, v); }, \
   [](const RunConfig& c) { return std::to_string(c.member); }}
#define MMCL_DOUBLE_FIELD(member) \
  {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }, \
   [](const RunConfig& c) { return fmt(c.member); }}
#define MMCL_BOOL_FIELD(member) \
  {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_bool(k, v); }, \
   [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }}
#define MMCL_STRING_FIELD(member) \
  {[](RunConfig& c, const std::string&, const std::string& v) { c.member = v; }, \
   [](const RunConfig& c) { return c.member; }}

inline const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"data.train", MMCL_STRING_FIELD(train_manifest)},
      {"data.test", MMCL_STRING_FIELD(test_manifest)},
      {"data.frames", MMCL_SIZE_FIELD(model.frames)},
      {"model.stream",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.model.stream = parse_modality(v); },
        [](const RunConfig& c) { return std::string(modality_name(c.model.stream)); }}},
      {"backbone.channels",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.model.backbone.channels = to_sizes(k, v); },
        [](const RunConfig& c) { return join(c.model.backbone.channels); }}},
      {"backbone.strides",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.model.backbone.strides = to_sizes(k, v); },
        [](const RunConfig& c) { return join(c.model.backbone.strides); }}},
      {"backbone.adjacency_file", MMCL_STRING_FIELD(adjacency_file)},
      {"backbone.kernel", MMCL_SIZE_FIELD(model.backbone.temporal_kernel)},
      {"backbone.batch_norm", MMCL_BOOL_FIELD(model.backbone.batch_norm)},
      {"backbone.adjacency",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          c.model.backbone.adjacency_mode = parse_adjacency_mode(v);
        },
        [](const RunConfig& c) {
          return std::string(c.model.backbone.adjacency_mode == AdjacencyMode::kDynamic ? "dynamic" : "static");
        }}},
      {"rgb.m", MMCL_SIZE_FIELD(model.composite_m)},
      {"rgb.height", MMCL_SIZE_FIELD(model.crop_height)},
      {"rgb.width", MMCL_SIZE_FIELD(model.crop_width)},
      {"rgb.channels",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.model.extractor.channels = to_sizes(k, v); },
        [](const RunConfig& c) { return join(c.model.extractor.channels); }}},
      {"rgb.kernel", MMCL_SIZE_FIELD(model.extractor.kernel)},
      {"rgb.stride", MMCL_SIZE_FIELD(model.extractor.stride)},
      {"fam.tau", MMCL_DOUBLE_FIELD(model.contrastive.temperature)},
      {"fam.hidden", MMCL_SIZE_FIELD(model.align_hidden)},
      {"frm.n", MMCL_SIZE_FIELD(model.text_dim)},
      {"frm.residual", MMCL_BOOL_FIELD(model.residual_refine)},
      {"frm.trainable", MMCL_BOOL_FIELD(trainer.frm_trainable)},
      {"loss.lambda1", MMCL_DOUBLE_FIELD(trainer.loss.lambda1)},
      {"loss.lambda2", MMCL_DOUBLE_FIELD(trainer.loss.lambda2)},
      {"train.preset",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          c.trainer.schedule = Schedule::preset(v);
          c.preset = v;
        },
        [](const RunConfig& c) { return c.preset; }}},
      {"train.lr", MMCL_DOUBLE_FIELD(trainer.schedule.base_lr)},
      {"train.epochs", MMCL_SIZE_FIELD(trainer.schedule.epochs)},
      {"train.batch", MMCL_SIZE_FIELD(trainer.schedule.batch_size)},
      {"train.warmup", MMCL_SIZE_FIELD(trainer.schedule.warmup_epochs)},
      {"train.decay_epochs",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.schedule.decay_epochs = to_sizes(k, v); },
        [](const RunConfig& c) { return join(c.trainer.schedule.decay_epochs); }}},
      {"train.decay_factor", MMCL_DOUBLE_FIELD(trainer.schedule.decay_factor)},
      {"train.momentum", MMCL_DOUBLE_FIELD(trainer.schedule.momentum)},
      {"train.weight_decay", MMCL_DOUBLE_FIELD(trainer.schedule.weight_decay)},
      {"train.seed", MMCL_SIZE_FIELD(trainer.seed)},
      {"output.dir", MMCL_STRING_FIELD(output_dir)},
      {"eval.topk",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.topk = to_sizes(k, v); },
        [](const RunConfig& c) { return join(c.topk); }}},
      {"ensemble.weights",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.ensemble_weights = to_doubles(k, v); },
        [](const RunConfig& c) { return join(c.ensemble_weights); }}},
      {"transfer.mapping", MMCL_STRING_FIELD(transfer_mapping)},
      {"transfer.refine", MMCL_BOOL_FIELD(transfer_refine)},
      {"synth.classes", MMCL_SIZE_FIELD(synth.class_count)},
      {"synth.train_per_class", MMCL_SIZE_FIELD(synth.train_per_class)},
      {"synth.test_per_class", MMCL_SIZE_FIELD(synth.test_per_class)},
      {"synth.frames", MMCL_SIZE_FIELD(synth.frames)},
      {"synth.noise", MMCL_DOUBLE_FIELD(synth.noise)},
      {"synth.object_cue", MMCL_DOUBLE_FIELD(synth.object_cue)},
      {"synth.image_size", MMCL_SIZE_FIELD(synth.image_size)},
      {"synth.text_dim", MMCL_SIZE_FIELD(synth.text_dim)},
      {"synth.text_noise", MMCL_DOUBLE_FIELD(synth.text_noise)},
      {"synth.seed", MMCL_SIZE_FIELD(synth.seed)},
  };
  return table;
}

#undef MMCL_SIZE_FIELD
#undef MMCL_DOUBLE_FIELD
#undef MMCL_BOOL_FIELD
#undef MMCL_STRING_FIELD

}  // namespace config_detail

struct ConfigEntry {
  std::string key;
  std::string value;
};

/// Splits config text into entries; malformed lines are usage errors.
inline std::vector<ConfigEntry> parse_config_text(std::string_view text, const std::string& source = "config") {
  std::vector<ConfigEntry> out;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string trimmed = config_detail::trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    out.push_back({config_detail::trim(trimmed.substr(0, eq)), config_detail::trim(trimmed.substr(eq + 1))});
  }
  return out;
}

/// Parses a "key=value" command-line override.
inline ConfigEntry parse_override(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw UsageError("override '" + s + "' is not key=value");
  return {config_detail::trim(s.substr(0, eq)), config_detail::trim(s.substr(eq + 1))};
}

inline void apply_config(RunConfig& config, const std::vector<ConfigEntry>& entries) {
  const auto& table = config_detail::fields();
  for (const ConfigEntry& e : entries) {
    if (!table.count(e.key)) throw UsageError("unknown config key '" + e.key + "'");
  }
  for (const ConfigEntry& e : entries) {
    if (e.key == "train.preset") table.at(e.key).set(config, e.key, e.value);
  }
  for (const ConfigEntry& e : entries) {
    if (e.key != "train.preset") table.at(e.key).set(config, e.key, e.value);
  }
}

inline RunConfig load_config(const std::filesystem::path& path, const std::vector<ConfigEntry>& overrides = {}) {
  RunConfig config;
  std::vector<ConfigEntry> entries;
  if (!path.empty()) {
    const auto bytes = io::read_file(path);
    entries = parse_config_text(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                                path.string());
  }
  entries.insert(entries.end(), overrides.begin(), overrides.end());
  apply_config(config, entries);
  return config;
}

/// Every key with its current value, one per line, sorted by key.
inline std::string config_to_text(const RunConfig& config) {
  std::string out;
  for (const auto& [key, field] : config_detail::fields()) out += key + " = " + field.get(config) + "\n";
  return out;
}

inline std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [key, field] : config_detail::fields()) out.push_back(key);
  return out;
}

}  // namespace mmcl

#endif  // MMCL_IO_CONFIG_HPP
