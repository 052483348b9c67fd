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

// Define-by-run reverse-mode differentiation.
//
// Every primitive evaluates eagerly and appends a node to the tape, so the
// node order is a topological order of the expression graph. backward()
// walks the tape from the root towards the leaves, calling each node's
// adjoint once its own gradient is complete.

#ifndef MMCL_AUTODIFF_TAPE_HPP
#define MMCL_AUTODIFF_TAPE_HPP

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mmcl/core/errors.hpp"
#include "mmcl/core/tensor.hpp"

namespace mmcl::ad {

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  /// Gradient accumulated by the last backward(); zeros if none reached.
  Tensor grad() const;
};

/// Adjoint of one node: receives the node's output gradient and pushes
/// contributions into its inputs through Tape::grad_buffer.
using Adjoint = std::function<void(Tape&, const Tensor& out_grad)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A differentiable input (parameter or data point under test).
  Var leaf(Tensor value, std::string name = "leaf") {
    check_finite(value, name);
    nodes_.push_back(Node{std::move(value), {}, std::move(name), {}, true});
    return Var{this, nodes_.size() - 1};
  }

  /// A non-differentiable input.
  Var constant(Tensor value) {
    check_finite(value, "constant");
    nodes_.push_back(Node{std::move(value), {}, "constant", {}, false});
    return Var{this, nodes_.size() - 1};
  }

  /// Appends the result of a primitive. The adjoint is dropped when no
  /// input needs a gradient.
  Var record(std::string op, Tensor value, std::initializer_list<Var> inputs, Adjoint adjoint) {
    check_finite(value, op);
    bool needs = false;
    for (const Var& v : inputs) {
      if (v.tape != this) throw UsageError("op '" + op + "' mixes variables from different tapes");
      needs = needs || nodes_[v.id].requires_grad;
    }
    Node node{std::move(value), {}, std::move(op), {}, needs};
    if (needs) node.adjoint = std::move(adjoint);
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
  }

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  const std::string& op(std::size_t id) const { return nodes_.at(id).op; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Mutable gradient storage for node `id`, zero-initialized on first use;
  /// nullptr when the node does not take gradients.
  Tensor* grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return nullptr;
    if (n.grad.numel() != n.value.numel()) n.grad = Tensor(n.value.shape());
    return &n.grad;
  }

  Tensor grad(std::size_t id) const {
    const Node& n = nodes_.at(id);
    if (n.grad.numel() != n.value.numel()) return Tensor(n.value.shape());
    return n.grad;
  }

  void zero_grad() {
    for (Node& n : nodes_) n.grad = Tensor();
  }

  /// Reverse accumulation from a scalar root.
  void backward(Var root) {
    if (root.tape != this) throw UsageError("backward root belongs to another tape");
    if (nodes_.at(root.id).value.numel() != 1) {
      throw UsageError("backward needs a scalar root, got shape " +
                       shape_str(nodes_[root.id].value.shape()));
    }
    zero_grad();
    Tensor* g = grad_buffer(root.id);
    if (g == nullptr) return;
    (*g)[0] = 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.adjoint || n.grad.numel() == 0) continue;
      // The adjoint may touch other nodes' gradients but never this one's.
      const Tensor out_grad = std::move(n.grad);
      n.adjoint(*this, out_grad);
      n.grad = out_grad;
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::string op;
    Adjoint adjoint;
    bool requires_grad = false;
  };

  static void check_finite(const Tensor& t, const std::string& op) {
    if (!t.all_finite()) throw NumericError("non-finite value produced by op '" + op + "'");
  }

  std::deque<Node> nodes_;  // deque keeps value()/shape() references stable while recording
};

inline const Tensor& Var::value() const { return tape->value(id); }
inline Tensor Var::grad() const { return tape->grad(id); }

}  // namespace mmcl::ad

#endif  // MMCL_AUTODIFF_TAPE_HPP
