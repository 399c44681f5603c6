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

#include "nocap/numerics/tape.hpp"

#include <algorithm>

#include "nocap/error.hpp"

namespace nocap::num {

Var Tape::constant(Tensor value) { return record(std::move(value), nullptr); }

Var Tape::leaf(const Tensor& param) {
  if (auto it = leaves_.find(&param); it != leaves_.end()) return Var(this, it->second);
  Var v = record(Tensor(), nullptr);
  nodes_[v.id()].external = &param;
  nodes_[v.id()].accumulate = param.requires_grad();
  leaves_.emplace(&param, v.id());
  return v;
}

Var Tape::record(Tensor value, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("loss was recorded on a different tape");
  if (loss.size() != 1) throw ContractError("backward() needs a scalar loss, got " + shape_string(loss.shape()));
  for (std::size_t i = 0; i <= loss.id(); ++i) nodes_[i].adjoint.assign(value(i).size(), 0.0);
  nodes_[loss.id()].adjoint[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward) {
      const bool nonzero = std::any_of(n.adjoint.begin(), n.adjoint.end(), [](double g) { return g != 0.0; });
      if (nonzero) n.backward(*this, i);
    }
    if (n.accumulate) n.external->accumulate_grad(n.adjoint);
  }
}

}  // namespace nocap::num
