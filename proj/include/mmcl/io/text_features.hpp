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

// Row-per-sample matrices keyed by sample id: a [rows, n] tensor container
// plus a sibling text file with one id per line in row order. Text features
// and exported score files both use this layout.

#ifndef MMCL_IO_TEXT_FEATURES_HPP
#define MMCL_IO_TEXT_FEATURES_HPP

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mmcl/core/errors.hpp"
#include "mmcl/frm/frm.hpp"
#include "mmcl/io/container.hpp"

namespace mmcl::io {

struct IdMatrix {
  std::vector<std::string> ids;
  Tensor rows;  // [ids.size(), n]
  DType dtype = DType::kFloat64;
};

inline std::vector<std::string> read_id_list(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::vector<std::string> ids;
  std::string cur;
  for (std::uint8_t b : bytes) {
    if (b == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      ids.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(b));
    }
  }
  if (!cur.empty()) ids.push_back(cur);
  return ids;
}

inline void write_id_matrix(const std::filesystem::path& matrix_path, const std::filesystem::path& ids_path,
                            const IdMatrix& m) {
  if (m.rows.rank() != 2 || m.rows.dim(0) != m.ids.size()) {
    throw DataError("id matrix has " + std::to_string(m.ids.size()) + " ids for rows " + shape_str(m.rows.shape()));
  }
  std::string text;
  for (const auto& id : m.ids) {
    if (id.empty() || id.find('\n') != std::string::npos) throw DataError("sample ids must be nonempty single lines");
    text += id + "\n";
  }
  write_tensor(matrix_path, m.rows, m.dtype);
  write_text_atomic(ids_path, text);
}

inline IdMatrix read_id_matrix(const std::filesystem::path& matrix_path, const std::filesystem::path& ids_path) {
  DecodedTensor t = read_tensor(matrix_path);
  IdMatrix out{read_id_list(ids_path), std::move(t.tensor), t.dtype};
  if (out.rows.rank() != 2 || out.rows.dim(0) != out.ids.size()) {
    throw DataError(matrix_path.string() + " has shape " + shape_str(out.rows.shape()) + " but " + ids_path.string() +
                    " lists " + std::to_string(out.ids.size()) + " ids");
  }
  std::set<std::string> seen;
  for (const auto& id : out.ids) {
    if (!seen.insert(id).second) throw DataError(ids_path.string() + ": duplicate id '" + id + "'");
  }
  return out;
}

/// Raw rows by id; unification to the model's n happens on lookup.
class TextFeatureTable {
 public:
  static TextFeatureTable load(const std::filesystem::path& matrix_path, const std::filesystem::path& ids_path) {
    TextFeatureTable t;
    t.m_ = read_id_matrix(matrix_path, ids_path);
    for (std::size_t i = 0; i < t.m_.ids.size(); ++i) t.index_[t.m_.ids[i]] = i;
    return t;
  }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  std::size_t size() const noexcept { return m_.ids.size(); }
  std::size_t raw_dim() const { return m_.rows.dim(1); }

  TextFeatureVector unified(const std::string& id, std::size_t n) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DataError("missing text feature ids: " + id);
    const std::size_t d = raw_dim();
    return unify_text_features(std::span<const double>(m_.rows.data() + it->second * d, d), n, id);
  }

  /// Every requested id that has no row, in request order.
  std::vector<std::string> missing(const std::vector<std::string>& ids) const {
    std::vector<std::string> out;
    for (const auto& id : ids) {
      if (!contains(id)) out.push_back(id);
    }
    return out;
  }

 private:
  IdMatrix m_;
  std::map<std::string, std::size_t> index_;
};

inline void write_text_features(const std::filesystem::path& matrix_path, const std::filesystem::path& ids_path,
                                const std::vector<TextFeatureVector>& features, DType dtype = DType::kFloat64) {
  if (features.empty()) throw DataError("no text features to write");
  const std::size_t n = features[0].values.size();
  IdMatrix m{{}, Tensor(Shape{features.size(), n}), dtype};
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].values.size() != n) throw DataError("text features differ in dimension");
    m.ids.push_back(features[i].sample_id);
    std::copy(features[i].values.begin(), features[i].values.end(), m.rows.data() + i * n);
  }
  write_id_matrix(matrix_path, ids_path, m);
}

}  // namespace mmcl::io

#endif  // MMCL_IO_TEXT_FEATURES_HPP
