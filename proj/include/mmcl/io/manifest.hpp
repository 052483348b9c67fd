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

// Dataset manifests (JSON). Paths are relative to the manifest's directory.
//
//   {
//     "topology": "body10" | "ntu25" | {"root": 0, "parents": [0, 0, 1, ...]},
//     "class_count": 4,
//     "text_features": "text.mmct",          optional, with "text_ids"
//     "text_ids": "text_ids.txt",
//     "samples": [
//       {"id": "s1", "label": 0, "skeleton": "skeletons/s1.mmct",
//        "frames": "frames/s1", "boxes": "frames/s1/boxes.txt",   optional
//        "text_id": "s1"}                                          optional
//     ]
//   }
//
// A frames directory holds the sample's PNG frames, read in file-name order.
// A boxes file has one line per frame: "x y w h", or "-" for no box.

#ifndef MMCL_IO_MANIFEST_HPP
#define MMCL_IO_MANIFEST_HPP

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmcl/core/errors.hpp"
#include "mmcl/data/dataset.hpp"
#include "mmcl/io/container.hpp"
#include "mmcl/io/png.hpp"
#include "mmcl/io/text_features.hpp"
#include "mmcl/skeleton/topology.hpp"

namespace mmcl::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline GraphTopology topology_from_json(const json& j) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "body10") return topology::body10();
    if (name == "ntu25") return topology::ntu25();
    throw DataError("unknown topology preset '" + name + "'");
  }
  if (j.is_object() && j.contains("root") && j.contains("parents")) {
    return GraphTopology::from_parents(j.at("parents").get<std::vector<std::size_t>>(), j.at("root").get<std::size_t>());
  }
  throw DataError("topology must be a preset name or {root, parents}");
}

inline json topology_to_json(const GraphTopology& t) {
  if (t == topology::body10()) return "body10";
  if (t == topology::ntu25()) return "ntu25";
  return json{{"root", t.root()}, {"parents", t.parents()}};
}

inline std::vector<std::optional<PersonBox>> read_boxes(const fs::path& path) {
  const auto bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<std::optional<PersonBox>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "-") {
      out.emplace_back();
      continue;
    }
    std::istringstream ls(line);
    PersonBox b;
    if (!(ls >> b.x >> b.y >> b.w >> b.h)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 'x y w h' or '-'");
    }
    out.emplace_back(b);
  }
  return out;
}

inline std::string boxes_to_text(const std::vector<std::optional<PersonBox>>& boxes) {
  std::string out;
  char buf[128];
  for (const auto& b : boxes) {
    if (!b) {
      out += "-\n";
      continue;
    }
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g\n", b->x, b->y, b->w, b->h);
    out += buf;
  }
  return out;
}

inline FrameSet read_frames(const fs::path& dir, const std::optional<fs::path>& boxes_path) {
  if (!fs::is_directory(dir)) throw DataError("cannot open frame directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no PNG frames in " + dir.string());
  FrameSet out;
  for (const auto& f : files) out.frames.push_back(read_png(f));
  if (boxes_path) {
    const auto boxes = read_boxes(*boxes_path);
    if (boxes.size() != files.size()) {
      throw DataError(boxes_path->string() + " has " + std::to_string(boxes.size()) + " boxes for " +
                      std::to_string(files.size()) + " frames");
    }
    const PersonBox whole{0, 0, static_cast<double>(out.frames[0].width), static_cast<double>(out.frames[0].height)};
    for (const auto& b : boxes) out.boxes.push_back(b.value_or(whole));
  }
  out.validate();
  return out;
}

struct LoadOptions {
  /// Text features are unified to this dimension on load.
  std::size_t text_dim = 32;
  bool load_frames = true;
  bool load_text = true;
};

/// Reads and validates a manifest. Every missing text id is reported in one error.
inline Dataset load_dataset(const fs::path& manifest_path, const LoadOptions& opt = {}) {
  const auto bytes = read_file(manifest_path);
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  const fs::path base = manifest_path.parent_path();
  auto resolve = [&](const std::string& rel) { return base / rel; };

  try {
    auto topo = std::make_shared<const GraphTopology>(topology_from_json(doc.at("topology")));
    Dataset ds{topo, doc.at("class_count").get<std::size_t>(), {}};

    std::optional<TextFeatureTable> text;
    if (opt.load_text && doc.contains("text_features")) {
      if (!doc.contains("text_ids")) throw DataError(manifest_path.string() + ": text_features without text_ids");
      text = TextFeatureTable::load(resolve(doc.at("text_features").get<std::string>()),
                                    resolve(doc.at("text_ids").get<std::string>()));
    }

    std::vector<std::string> wanted_text;
    for (const json& s : doc.at("samples")) {
      if (s.contains("text_id")) wanted_text.push_back(s.at("text_id").get<std::string>());
    }
    if (opt.load_text && !wanted_text.empty()) {
      const auto missing = text ? text->missing(wanted_text) : wanted_text;
      if (!missing.empty()) {
        std::string list;
        for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
        throw DataError("missing text feature ids (" + std::to_string(missing.size()) + "): " + list);
      }
    }

    for (const json& s : doc.at("samples")) {
      const std::string id = s.at("id").get<std::string>();
      Tensor coords = read_tensor(resolve(s.at("skeleton").get<std::string>())).tensor;
      Sample sample{id, s.at("label").get<std::size_t>(), SkeletonSequence(std::move(coords), topo, id), {}, {}};
      if (opt.load_frames && s.contains("frames")) {
        std::optional<fs::path> boxes;
        if (s.contains("boxes")) boxes = resolve(s.at("boxes").get<std::string>());
        sample.frames = read_frames(resolve(s.at("frames").get<std::string>()), boxes);
      }
      if (opt.load_text && s.contains("text_id")) {
        TextFeatureVector f = text->unified(s.at("text_id").get<std::string>(), opt.text_dim);
        f.sample_id = id;
        sample.text = std::move(f);
      }
      ds.samples.push_back(std::move(sample));
    }
    ds.validate();
    return ds;
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
}

/// Writes every part of `ds` under `dir` and a manifest named `name`.json.
/// Sample files go to skeletons/<id>.mmct and frames/<id>/NNN.png.
inline fs::path write_dataset(const Dataset& ds, const fs::path& dir, const std::string& name) {
  ds.validate();
  json samples = json::array();
  std::vector<TextFeatureVector> text;
  for (const Sample& s : ds.samples) {
    json j{{"id", s.id}, {"label", s.label}, {"skeleton", "skeletons/" + s.id + ".mmct"}};
    write_tensor(dir / "skeletons" / (s.id + ".mmct"), s.skeleton.coords());
    if (s.frames) {
      const std::string fdir = "frames/" + s.id;
      for (std::size_t i = 0; i < s.frames->frames.size(); ++i) {
        char fname[32];
        std::snprintf(fname, sizeof(fname), "%03zu.png", i);
        write_png(dir / fdir / fname, s.frames->frames[i]);
      }
      j["frames"] = fdir;
      if (!s.frames->boxes.empty()) {
        std::vector<std::optional<PersonBox>> boxes(s.frames->boxes.begin(), s.frames->boxes.end());
        write_text_atomic(dir / fdir / "boxes.txt", boxes_to_text(boxes));
        j["boxes"] = fdir + "/boxes.txt";
      }
    }
    if (s.text) {
      j["text_id"] = s.id;
      text.push_back(TextFeatureVector{s.text->values, s.id});
    }
    samples.push_back(std::move(j));
  }
  json doc{{"topology", topology_to_json(*ds.topology)}, {"class_count", ds.class_count}};
  if (!text.empty()) {
    write_text_features(dir / (name + "_text.mmct"), dir / (name + "_text_ids.txt"), text);
    doc["text_features"] = name + "_text.mmct";
    doc["text_ids"] = name + "_text_ids.txt";
  }
  doc["samples"] = std::move(samples);
  const fs::path path = dir / (name + ".json");
  write_text_atomic(path, doc.dump(2) + "\n");
  return path;
}

}  // namespace mmcl::io

#endif  // MMCL_IO_MANIFEST_HPP
