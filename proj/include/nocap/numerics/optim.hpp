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

#include <cstdint>
#include <span>
#include <vector>

#include "nocap/numerics/tensor.hpp"

namespace nocap::num {

struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update of every parameter from its grad buffer.
// Moment buffers are sized on first use.
void adam_step(std::span<Tensor* const> params, AdamState& state, double lr);

struct NoamSchedule {
  int model_dim = 512;
  int warmup = 10000;
};

// model_dim^-0.5 * min(step^-0.5, step * warmup^-1.5)
double noam_lr(std::int64_t step, const NoamSchedule& sched);

}  // namespace nocap::num
