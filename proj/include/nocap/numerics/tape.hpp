// Copyright 2026 The nocap Authors. All Rights Reserved.
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
// =============================================================================

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "nocap/numerics/tensor.hpp"

namespace nocap::num {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t size() const { return value().size(); }
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Explicit reverse-mode recording for one forward pass. Nodes are appended in
// evaluation order, so reverse index order is a valid topological order.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Records a parameter. If it requires grad, backward() accumulates into
  // param.grad(). Repeated calls with the same tensor return the same node.
  // The node aliases `param`, which must not change while the tape is used.
  Var leaf(const Tensor& param);
  Var record(Tensor value, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and propagates. Parameter gradients
  // accumulate across calls; node adjoints are recomputed each time.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }
  std::span<const double> adjoint(std::size_t id) const { return nodes_[id].adjoint; }
  std::span<double> adjoint_mut(std::size_t id) { return nodes_[id].adjoint; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> adjoint;
    BackwardFn backward;
    const Tensor* external = nullptr;  // leaves alias the parameter
    bool accumulate = false;
  };
  std::deque<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> leaves_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace nocap::num
