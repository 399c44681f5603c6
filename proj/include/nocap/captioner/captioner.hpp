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
#include <cstdint>
#include <memory>
#include <vector>

#include <json.hpp>

#include "nocap/decoder/language_model.hpp"
#include "nocap/decoder/search.hpp"
#include "nocap/numerics/layers.hpp"
#include "nocap/text.hpp"

namespace nocap::captioner {

// Desk-scale defaults.
struct CaptionerConfig {
  std::size_t d_model = 64;
  std::size_t num_enc_layers = 3;
  std::size_t num_dec_layers = 3;
  std::size_t num_heads = 2;
  std::size_t num_memory = 8;
  std::size_t embed_dim = 32;
  std::size_t ffn_dim = 256;
  std::size_t max_len = 16;  // T: longest token sequence including BOS
  std::size_t visual_dim = 22;

  void validate() const;
};

void to_json(nlohmann::json& j, const CaptionerConfig& c);
void from_json(const nlohmann::json& j, CaptionerConfig& c);

struct EncoderLayer {
  num::LayerNorm attn_norm;
  num::MultiHeadAttention attn;
  num::Tensor mem_k;  // [num_memory x d_model], absent when num_memory == 0
  num::Tensor mem_v;
  num::LayerNorm ffn_norm;
  num::FeedForward ffn;
};

struct DecoderLayer {
  num::LayerNorm self_norm;
  num::MultiHeadAttention self;
  num::LayerNorm cross_norm;
  num::MultiHeadAttention cross;
  num::LayerNorm ffn_norm;
  num::FeedForward ffn;
};

struct CaptionerParams {
  num::Linear visual_in;
  std::vector<EncoderLayer> encoder;
  num::LayerNorm enc_norm;
  num::Tensor embedding;  // E: [vocab x embed_dim], also the output head
  num::Linear up;         // embed_dim -> d_model
  std::vector<DecoderLayer> decoder;
  num::LayerNorm dec_norm;
  num::Linear down;  // d_model -> embed_dim

  CaptionerParams() = default;
  CaptionerParams(const CaptionerConfig& cfg, std::size_t vocab_size, Rng& rng);
  num::NamedParams named();
};

// Fixed sinusoidal position code for position `pos`.
std::vector<double> positional_encoding(std::size_t pos, std::size_t dim);

// Region vectors [n x visual_dim] -> encoder memory [n x d_model].
num::Var encode(num::Tape& tape, const num::Tensor& regions, const CaptionerConfig& cfg,
                const CaptionerParams& params);

// Per-position next-token logits [len x vocab]. PAD keys are masked.
num::Var decode_logits(const std::vector<TokenId>& tokens, num::Var enc_out, const CaptionerConfig& cfg,
                       const CaptionerParams& params);

// Mean next-token cross-entropy over the positions up to and including the
// first EOS. Trailing PADs are ignored.
num::Var xent_loss(const std::vector<TokenId>& tokens, num::Var enc_out, const CaptionerConfig& cfg,
                   const CaptionerParams& params);

// Log-softmax of the final-position logits.
std::vector<double> step_distribution(const std::vector<TokenId>& prefix, num::Var enc_out,
                                      const CaptionerConfig& cfg, const CaptionerParams& params);

num::Tensor region_matrix(const std::vector<std::vector<double>>& region_visual);

// BOS + ids + EOS.
std::vector<TokenId> caption_ids(const Vocabulary& vocab, const Tokens& caption);

class Captioner;

// Incremental decoder over frozen parameters for one encoded scene. Each
// state caches its own self-attention keys/values and links to its parent.
class CaptionerLm : public decoder::LanguageModel {
 public:
  CaptionerLm(const Captioner& model, const num::Tensor& regions);

  std::size_t vocab_size() const override;
  StatePtr start() const override;
  StatePtr advance(const StatePtr& state, TokenId token) const override;

 private:
  struct CachedState;
  StatePtr step(std::shared_ptr<const CachedState> parent, TokenId token) const;

  const Captioner& model_;
  // Per decoder layer: cross-attention keys/values [n x d_model].
  std::vector<std::vector<double>> cross_k_;
  std::vector<std::vector<double>> cross_v_;
  std::size_t num_regions_ = 0;
};

// Trainable scoring of whole sequences against an encoded scene; enc_out
// must live on the tape passed to log_prob_rows.
class CaptionerScorer : public decoder::DifferentiableLm {
 public:
  CaptionerScorer(const Captioner& model, num::Var enc_out) : model_(model), enc_out_(enc_out) {}
  num::Var log_prob_rows(num::Tape& tape, const std::vector<TokenId>& inputs) const override;

 private:
  const Captioner& model_;
  num::Var enc_out_;
};

class Captioner {
 public:
  Captioner(CaptionerConfig cfg, Vocabulary vocab, std::uint64_t seed);

  const CaptionerConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }
  CaptionerParams& params() { return params_; }
  const CaptionerParams& params() const { return params_; }
  num::NamedParams named() { return params_.named(); }

  CaptionerLm language_model(const num::Tensor& regions) const { return CaptionerLm(*this, regions); }

 private:
  CaptionerConfig cfg_;
  Vocabulary vocab_;
  CaptionerParams params_;
};

}  // namespace nocap::captioner
