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

#include "nocap/numerics/layers.hpp"

#include <cmath>

namespace nocap::num {

Tensor xavier(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(Shape{fan_in, fan_out});
  for (double& x : t.data()) x = rng.uniform(-limit, limit);
  return t;
}

Tensor constant_vector(std::size_t n, double value) {
  Tensor t(Shape{n});
  for (double& x : t.data()) x = value;
  return t;
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng) : w(xavier(in, out, rng)), b(constant_vector(out, 0.0)) {}

Var Linear::operator()(Var x) const {
  Tape& t = x.tape();
  return linear(x, t.leaf(w), t.leaf(b));
}

void Linear::collect(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + ".w", &w);
  out.emplace_back(prefix + ".b", &b);
}

LayerNorm::LayerNorm(std::size_t n) : gain(constant_vector(n, 1.0)), bias(constant_vector(n, 0.0)) {}

Var LayerNorm::operator()(Var x) const {
  Tape& t = x.tape();
  return layer_norm(x, t.leaf(gain), t.leaf(bias));
}

void LayerNorm::collect(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + ".gain", &gain);
  out.emplace_back(prefix + ".bias", &bias);
}

MultiHeadAttention::MultiHeadAttention(std::size_t dim, std::size_t heads_, Rng& rng)
    : q(dim, dim, rng), k(dim, dim, rng), v(dim, dim, rng), o(dim, dim, rng), heads(heads_) {}

Var MultiHeadAttention::operator()(Var queries, Var keys_values, const AttentionMask* mask) const {
  return o(attention(q(queries), k(keys_values), v(keys_values), heads, mask));
}

Var MultiHeadAttention::with_memory(Var queries, Var keys_values, Var mem_k, Var mem_v,
                                    const AttentionMask* mask) const {
  Var keys = concat_rows(k(keys_values), mem_k);
  Var values = concat_rows(v(keys_values), mem_v);
  return o(attention(q(queries), keys, values, heads, mask));
}

void MultiHeadAttention::collect(const std::string& prefix, NamedParams& out) {
  q.collect(prefix + ".q", out);
  k.collect(prefix + ".k", out);
  v.collect(prefix + ".v", out);
  o.collect(prefix + ".o", out);
}

FeedForward::FeedForward(std::size_t dim, std::size_t hidden, Rng& rng) : up(dim, hidden, rng), down(hidden, dim, rng) {}

Var FeedForward::operator()(Var x) const { return down(relu(up(x))); }

void FeedForward::collect(const std::string& prefix, NamedParams& out) {
  up.collect(prefix + ".up", out);
  down.collect(prefix + ".down", out);
}

void enable_grads(const NamedParams& params) {
  for (const auto& [name, t] : params) t->set_requires_grad(true);
}

void zero_grads(const NamedParams& params) {
  for (const auto& [name, t] : params) t->zero_grad();
}

std::vector<Tensor*> tensors_of(const NamedParams& params) {
  std::vector<Tensor*> out;
  out.reserve(params.size());
  for (const auto& [name, t] : params) out.push_back(t);
  return out;
}

}  // namespace nocap::num
