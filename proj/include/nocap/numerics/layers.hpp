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
#include <string>

#include "nocap/numerics/checkpoint.hpp"
#include "nocap/numerics/ops.hpp"
#include "nocap/numerics/random.hpp"
#include "nocap/numerics/tensor.hpp"

// Transformer building blocks shared by the selector and the captioner.
namespace nocap::num {

Tensor xavier(std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor constant_vector(std::size_t n, double value);

struct Linear {
  Tensor w;  // [in x out]
  Tensor b;  // [out]

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng);
  Var operator()(Var x) const;
  void collect(const std::string& prefix, NamedParams& out);
  std::size_t in_dim() const { return w.rows(); }
  std::size_t out_dim() const { return w.cols(); }
};

struct LayerNorm {
  Tensor gain;
  Tensor bias;

  LayerNorm() = default;
  explicit LayerNorm(std::size_t n);
  Var operator()(Var x) const;
  void collect(const std::string& prefix, NamedParams& out);
};

// Projections around the attention kernel. Memory slots, when present, are
// appended to the projected keys and values.
struct MultiHeadAttention {
  Linear q, k, v, o;
  std::size_t heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t dim, std::size_t heads, Rng& rng);
  Var operator()(Var queries, Var keys_values, const AttentionMask* mask = nullptr) const;
  // Keys = [k(x); mem_k], values = [v(x); mem_v]. Mask, if given, covers the
  // extended key set.
  Var with_memory(Var queries, Var keys_values, Var mem_k, Var mem_v, const AttentionMask* mask = nullptr) const;
  void collect(const std::string& prefix, NamedParams& out);
};

struct FeedForward {
  Linear up, down;

  FeedForward() = default;
  FeedForward(std::size_t dim, std::size_t hidden, Rng& rng);
  Var operator()(Var x) const;
  void collect(const std::string& prefix, NamedParams& out);
};

// Marks every parameter as trainable and clears its gradient buffer.
void enable_grads(const NamedParams& params);
void zero_grads(const NamedParams& params);
std::vector<Tensor*> tensors_of(const NamedParams& params);

}  // namespace nocap::num
