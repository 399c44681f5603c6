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
#include <span>
#include <utility>
#include <vector>

#include "nocap/numerics/kernels.hpp"
#include "nocap/numerics/tape.hpp"

// Differentiable operations. Matrices are rank-2 tensors; bias/gain vectors
// are rank-1 (or 1 x n) and broadcast over rows.
namespace nocap::num {

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_bias(Var x, Var bias);
// x[m x in] * w[in x out] + b[out]
Var linear(Var x, Var w, Var b);
Var relu(Var x);
Var sigmoid(Var x);
Var log(Var x);
Var layer_norm(Var x, Var gain, Var bias);
// axis 1 normalises each row, axis 0 each column.
Var softmax(Var x, int axis = 1);
Var log_softmax(Var x);

// Multi-head scaled dot-product attention; `heads` splits the model width.
Var attention(Var q, Var k, Var v, std::size_t heads, const AttentionMask* mask = nullptr);
Var scaled_dot_attention(Var q, Var k, Var v, const AttentionMask* mask = nullptr);

Var concat_rows(Var a, Var b);
Var gather_rows(Var table, std::span<const std::size_t> ids);
Var row(Var x, std::size_t r);
// Entries x[r][c] for each (r, c), as a rank-1 tensor.
Var gather_elements(Var x, std::span<const std::pair<std::size_t, std::size_t>> positions);

Var sum(Var x);
Var mean(Var x);
// sum_i weights[i] * x[i]; weights are constants.
Var weighted_sum(Var x, std::span<const double> weights);
Var add_n(std::span<const Var> terms);

inline constexpr double kBceClamp = 1e-12;

// mean_i -[lambda1 * t_i * log(y_i) + lambda0 * (1 - t_i) * log(1 - y_i)], with
// y clamped to [kBceClamp, 1 - kBceClamp].
Var weighted_bce(Var scores, std::span<const double> targets, double lambda0, double lambda1);

}  // namespace nocap::num
