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
#include <vector>

namespace nocap::num {

// Boolean attention mask over (queries x keys). A masked entry receives an
// attention weight of exactly zero and takes no part in the softmax.
struct AttentionMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<unsigned char> allowed;  // row-major, 1 = may attend

  static AttentionMask full(std::size_t rows, std::size_t cols);
  static AttentionMask causal(std::size_t n);
  bool operator()(std::size_t r, std::size_t c) const { return allowed[r * cols + c] != 0; }
  void set(std::size_t r, std::size_t c, bool on) { allowed[r * cols + c] = on ? 1 : 0; }
};

// Raw row-major kernels shared by the tape ops and the cached inference path.
namespace kernels {

// out[m x n] = a[m x k] * b[k x n]
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t m,
            std::size_t k, std::size_t n);
// out[m x n] = a[m x k] * b[n x k]^T
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t m,
               std::size_t k, std::size_t n);
// out[m x n] += a[m x k]^T ... used for weight gradients: out[k x n] += a[m x k]^T * g[m x n]
void matmul_tn_acc(std::span<const double> a, std::span<const double> g, std::span<double> out, std::size_t m,
                   std::size_t k, std::size_t n);

inline constexpr double kLayerNormEps = 1e-6;

// Row-wise layer norm. mean/rstd (length m) are filled for the backward pass.
void layer_norm(std::span<const double> x, std::span<const double> gain, std::span<const double> bias,
                std::span<double> out, std::span<double> mean, std::span<double> rstd, std::size_t m, std::size_t n);

void softmax_inplace(std::span<double> row);
void log_softmax_inplace(std::span<double> row);

// Multi-head scaled dot-product attention. q is [m x d], k and v are [s x d];
// heads split the d columns evenly. probs receives heads*m*s weights
// (zero at masked entries). Throws ContractError when a mask row is empty.
void attention(std::span<const double> q, std::span<const double> k, std::span<const double> v, std::size_t m,
               std::size_t s, std::size_t d, std::size_t heads, const AttentionMask* mask, std::span<double> out,
               std::span<double> probs);

}  // namespace kernels
}  // namespace nocap::num
