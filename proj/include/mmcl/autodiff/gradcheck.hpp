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

#ifndef MMCL_AUTODIFF_GRADCHECK_HPP
#define MMCL_AUTODIFF_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "mmcl/autodiff/tape.hpp"
#include "mmcl/core/errors.hpp"
#include "mmcl/core/tensor.hpp"

namespace mmcl::ad {

/// A scalar-valued function of several tensor inputs, expressed on a tape.
using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
};

inline double evaluate_scalar(const ScalarFunction& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& x : inputs) vars.push_back(tape.constant(x));
  const double v = f(tape, vars).value().item();
  if (!std::isfinite(v)) throw NumericError("gradcheck: function value overflowed");
  return v;
}

/// Compares reverse-mode gradients with central differences.
/// Error per coordinate is |analytic - numeric| / max(1, |analytic|).
inline GradcheckResult gradcheck(const ScalarFunction& f, std::vector<Tensor> inputs, double eps = 1e-6) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& x : inputs) vars.push_back(tape.leaf(x));
    Var root = f(tape, vars);
    tape.backward(root);
    for (const Var& v : vars) analytic.push_back(v.grad());
  }
  GradcheckResult result;
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    for (std::size_t i = 0; i < inputs[a].numel(); ++i) {
      const double x0 = inputs[a][i];
      inputs[a][i] = x0 + eps;
      const double fp = evaluate_scalar(f, inputs);
      inputs[a][i] = x0 - eps;
      const double fm = evaluate_scalar(f, inputs);
      inputs[a][i] = x0;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double an = analytic[a][i];
      const double err = std::abs(an - numeric) / std::max(1.0, std::abs(an));
      if (!std::isfinite(err)) throw NumericError("gradcheck: non-finite difference quotient");
      if (err > result.max_rel_error) result = {err, a, i};
    }
  }
  return result;
}

/// Single-input convenience overload.
inline GradcheckResult gradcheck(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double eps = 1e-6) {
  return gradcheck([&f](Tape& t, std::span<const Var> v) { return f(t, v[0]); }, std::vector<Tensor>{x}, eps);
}

}  // namespace mmcl::ad

#endif  // MMCL_AUTODIFF_GRADCHECK_HPP
