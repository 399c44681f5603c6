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

#include "nocap/numerics/optim.hpp"

#include <algorithm>
#include <cmath>

#include "nocap/error.hpp"

namespace nocap::num {

void adam_step(std::span<Tensor* const> params, AdamState& state, double lr) {
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->size(), 0.0);
      state.v.emplace_back(p->size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: parameter list changed between steps");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    if (!p.requires_grad()) throw ContractError("adam_step: parameter without a gradient buffer");
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.size()) throw DimensionError("adam_step: moment shape mismatch");
    auto data = p.data();
    auto grad = p.grad();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double g = grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      data[j] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

double noam_lr(std::int64_t step, const NoamSchedule& sched) {
  if (step < 1) throw ContractError("noam_lr: step must be >= 1");
  if (sched.model_dim <= 0 || sched.warmup <= 0) throw ContractError("noam_lr: dimensions must be positive");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(sched.warmup);
  return std::pow(static_cast<double>(sched.model_dim), -0.5) * std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

}  // namespace nocap::num
