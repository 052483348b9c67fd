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

// Reference computations for tests. These deliberately avoid the tape and
// the library kernels: plain loops over std::vector with long double sums.

#ifndef MMCL_TESTS_ORACLES_HPP
#define MMCL_TESTS_ORACLES_HPP

#include <cmath>
#include <cstddef>
#include <vector>

namespace mmcl::oracle {

using Rows = std::vector<std::vector<double>>;

inline long double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

// -log of the positive pair's share of exp-similarity mass, against the
// other modality's rows and the own modality's rows except itself.
inline long double pair_term(const Rows& a, const Rows& b, std::size_t i, double tau) {
  const long double pos = std::exp(cosine(a[i], b[i]) / tau);
  long double denom = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    denom += std::exp(cosine(a[i], b[k]) / tau);
    if (k != i) denom += std::exp(cosine(a[i], a[k]) / tau);
  }
  return -std::log(pos / denom);
}

inline double contrastive(const Rows& g, const Rows& c, double tau) {
  long double total = 0;
  for (std::size_t i = 0; i < g.size(); ++i) total += pair_term(g, c, i, tau) + pair_term(c, g, i, tau);
  return static_cast<double>(total / (2.0L * g.size()));
}

// S_R[r] = [residual] S[r] + sum_c (sum_i f_i M_i[r][c]) S[c], as three nested loops.
inline std::vector<double> refine(const std::vector<double>& f, const std::vector<Rows>& m,
                                  const std::vector<double>& s, bool residual) {
  const std::size_t C = s.size();
  std::vector<double> out(C);
  for (std::size_t r = 0; r < C; ++r) {
    long double acc = residual ? s[r] : 0.0L;
    for (std::size_t c = 0; c < C; ++c) {
      long double rc = 0;
      for (std::size_t i = 0; i < f.size(); ++i) rc += static_cast<long double>(f[i]) * m[i][r][c];
      acc += rc * s[c];
    }
    out[r] = static_cast<double>(acc);
  }
  return out;
}

inline double cross_entropy(const std::vector<double>& s, std::size_t label) {
  long double z = 0;
  for (double v : s) z += std::exp(static_cast<long double>(v) - s[label]);
  return static_cast<double>(std::log(z));
}

}  // namespace mmcl::oracle

#endif  // MMCL_TESTS_ORACLES_HPP
