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

// Checkpoint directory layout:
//   index.txt     one "name<TAB>file" line per parameter, sorted by name
//   <name>.mmct   float64 tensor container per parameter
//   config.txt    the full run configuration that produced the weights

#ifndef MMCL_IO_CHECKPOINT_HPP
#define MMCL_IO_CHECKPOINT_HPP

#include <filesystem>
#include <sstream>
#include <string>

#include "mmcl/core/errors.hpp"
#include "mmcl/core/parameters.hpp"
#include "mmcl/io/container.hpp"

namespace mmcl::io {

struct Checkpoint {
  ParameterSet params;
  std::string config_text;
};

inline void save_checkpoint(const std::filesystem::path& dir, const ParameterSet& params,
                            const std::string& config_text) {
  std::string index;
  for (const auto& [name, value] : params.items()) {
    const std::string file = name + ".mmct";
    write_tensor(dir / file, value, DType::kFloat64);
    index += name + "\t" + file + "\n";
  }
  write_text_atomic(dir / "config.txt", config_text);
  // written last so a readable index implies complete tensors
  write_text_atomic(dir / "index.txt", index);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto idx = read_file(dir / "index.txt");
  std::istringstream in(std::string(idx.begin(), idx.end()));
  Checkpoint out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError((dir / "index.txt").string() + ": malformed line '" + line + "'");
    out.params.set(line.substr(0, tab), read_tensor(dir / line.substr(tab + 1)).tensor);
  }
  const auto cfg = read_file(dir / "config.txt");
  out.config_text.assign(cfg.begin(), cfg.end());
  return out;
}

}  // namespace mmcl::io

#endif  // MMCL_IO_CHECKPOINT_HPP
