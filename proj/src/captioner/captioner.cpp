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

#include "nocap/captioner/captioner.hpp"

#include <algorithm>
#include <cmath>

#include "nocap/error.hpp"
#include "nocap/numerics/kernels.hpp"

namespace nocap::captioner {

void CaptionerConfig::validate() const {
  if (d_model == 0 || num_heads == 0 || embed_dim == 0 || ffn_dim == 0 || visual_dim == 0) {
    throw ConfigError("captioner dimensions must be positive");
  }
  if (d_model % num_heads != 0) throw ConfigError("d_model must be divisible by num_heads");
  if (num_enc_layers == 0 || num_dec_layers == 0) throw ConfigError("captioner needs at least one layer each way");
  if (max_len < 2) throw ConfigError("max_len must allow BOS plus one token");
}

void to_json(nlohmann::json& j, const CaptionerConfig& c) {
  j = {{"d_model", c.d_model},       {"num_enc_layers", c.num_enc_layers}, {"num_dec_layers", c.num_dec_layers},
       {"num_heads", c.num_heads},   {"num_memory", c.num_memory},         {"embed_dim", c.embed_dim},
       {"ffn_dim", c.ffn_dim},       {"max_len", c.max_len},               {"visual_dim", c.visual_dim}};
}

void from_json(const nlohmann::json& j, CaptionerConfig& c) {
  c.d_model = j.value("d_model", c.d_model);
  c.num_enc_layers = j.value("num_enc_layers", c.num_enc_layers);
  c.num_dec_layers = j.value("num_dec_layers", c.num_dec_layers);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.num_memory = j.value("num_memory", c.num_memory);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.max_len = j.value("max_len", c.max_len);
  c.visual_dim = j.value("visual_dim", c.visual_dim);
}

namespace {

num::Tensor memory_slots(std::size_t count, std::size_t dim, Rng& rng) {
  if (count == 0) return {};
  num::Tensor t(num::Shape{count, dim});
  const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& x : t.data()) x = sd * rng.normal();
  return t;
}

}  // namespace

CaptionerParams::CaptionerParams(const CaptionerConfig& cfg, std::size_t vocab_size, Rng& rng)
    : visual_in(cfg.visual_dim, cfg.d_model, rng),
      enc_norm(cfg.d_model),
      up(cfg.embed_dim, cfg.d_model, rng),
      dec_norm(cfg.d_model),
      down(cfg.d_model, cfg.embed_dim, rng) {
  for (std::size_t l = 0; l < cfg.num_enc_layers; ++l) {
    EncoderLayer L{num::LayerNorm(cfg.d_model), num::MultiHeadAttention(cfg.d_model, cfg.num_heads, rng),
                   memory_slots(cfg.num_memory, cfg.d_model, rng), memory_slots(cfg.num_memory, cfg.d_model, rng),
                   num::LayerNorm(cfg.d_model), num::FeedForward(cfg.d_model, cfg.ffn_dim, rng)};
    encoder.push_back(std::move(L));
  }
  embedding = num::Tensor(num::Shape{vocab_size, cfg.embed_dim});
  const double sd = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));
  for (double& x : embedding.data()) x = sd * rng.normal();
  for (std::size_t l = 0; l < cfg.num_dec_layers; ++l) {
    decoder.push_back({num::LayerNorm(cfg.d_model), num::MultiHeadAttention(cfg.d_model, cfg.num_heads, rng),
                       num::LayerNorm(cfg.d_model), num::MultiHeadAttention(cfg.d_model, cfg.num_heads, rng),
                       num::LayerNorm(cfg.d_model), num::FeedForward(cfg.d_model, cfg.ffn_dim, rng)});
  }
}

num::NamedParams CaptionerParams::named() {
  num::NamedParams out;
  visual_in.collect("captioner.visual_in", out);
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    const std::string p = "captioner.enc" + std::to_string(l);
    auto& L = encoder[l];
    L.attn_norm.collect(p + ".attn_norm", out);
    L.attn.collect(p + ".attn", out);
    if (L.mem_k.size() > 0) {
      out.emplace_back(p + ".mem_k", &L.mem_k);
      out.emplace_back(p + ".mem_v", &L.mem_v);
    }
    L.ffn_norm.collect(p + ".ffn_norm", out);
    L.ffn.collect(p + ".ffn", out);
  }
  enc_norm.collect("captioner.enc_norm", out);
  out.emplace_back("captioner.embedding", &embedding);
  up.collect("captioner.up", out);
  for (std::size_t l = 0; l < decoder.size(); ++l) {
    const std::string p = "captioner.dec" + std::to_string(l);
    auto& L = decoder[l];
    L.self_norm.collect(p + ".self_norm", out);
    L.self.collect(p + ".self", out);
    L.cross_norm.collect(p + ".cross_norm", out);
    L.cross.collect(p + ".cross", out);
    L.ffn_norm.collect(p + ".ffn_norm", out);
    L.ffn.collect(p + ".ffn", out);
  }
  dec_norm.collect("captioner.dec_norm", out);
  down.collect("captioner.down", out);
  return out;
}

std::vector<double> positional_encoding(std::size_t pos, std::size_t dim) {
  std::vector<double> pe(dim);
  for (std::size_t i = 0; i < dim; i += 2) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(dim));
    pe[i] = std::sin(static_cast<double>(pos) * freq);
    if (i + 1 < dim) pe[i + 1] = std::cos(static_cast<double>(pos) * freq);
  }
  return pe;
}

num::Var encode(num::Tape& tape, const num::Tensor& regions, const CaptionerConfig& cfg,
                const CaptionerParams& params) {
  if (regions.rank() != 2 || regions.rows() == 0) throw ContractError("encode: need at least one region vector");
  if (regions.cols() != cfg.visual_dim) throw DimensionError("encode: region vectors must have visual_dim entries");
  num::Var x = params.visual_in(tape.constant(regions));
  for (const auto& L : params.encoder) {
    num::Var h = L.attn_norm(x);
    num::Var a = L.mem_k.size() > 0 ? L.attn.with_memory(h, h, tape.leaf(L.mem_k), tape.leaf(L.mem_v))
                                     : L.attn(h, h);
    x = num::add(x, a);
    x = num::add(x, L.ffn(L.ffn_norm(x)));
  }
  return params.enc_norm(x);
}

namespace {

void check_tokens(const std::vector<TokenId>& tokens, const CaptionerConfig& cfg, const CaptionerParams& params) {
  if (tokens.empty() || tokens.front() != Vocabulary::kBos) throw ContractError("token sequence must start with BOS");
  if (tokens.size() > cfg.max_len) {
    throw ContractError("token sequence longer than max_len " + std::to_string(cfg.max_len));
  }
  for (TokenId t : tokens) {
    if (t >= params.embedding.rows()) throw ContractError("unknown token id " + std::to_string(t));
  }
}

num::Tensor position_block(std::size_t len, std::size_t dim) {
  num::Tensor t(num::Shape{len, dim});
  for (std::size_t p = 0; p < len; ++p) {
    const auto pe = positional_encoding(p, dim);
    std::copy(pe.begin(), pe.end(), t.data().begin() + static_cast<std::ptrdiff_t>(p * dim));
  }
  return t;
}

}  // namespace

num::Var decode_logits(const std::vector<TokenId>& tokens, num::Var enc_out, const CaptionerConfig& cfg,
                       const CaptionerParams& params) {
  check_tokens(tokens, cfg, params);
  num::Tape& tape = enc_out.tape();
  const std::size_t len = tokens.size();
  num::Var emb = tape.leaf(params.embedding);
  num::Var x = num::add(params.up(num::gather_rows(emb, tokens)), tape.constant(position_block(len, cfg.d_model)));
  num::AttentionMask mask = num::AttentionMask::causal(len);
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      if (tokens[j] == Vocabulary::kPad) mask.set(i, j, false);
    }
  }
  for (const auto& L : params.decoder) {
    num::Var h = L.self_norm(x);
    x = num::add(x, L.self(h, h, &mask));
    x = num::add(x, L.cross(L.cross_norm(x), enc_out));
    x = num::add(x, L.ffn(L.ffn_norm(x)));
  }
  num::Var h = params.down(params.dec_norm(x));
  return num::matmul_nt(h, emb);
}

num::Var xent_loss(const std::vector<TokenId>& tokens, num::Var enc_out, const CaptionerConfig& cfg,
                   const CaptionerParams& params) {
  const auto eos = std::find(tokens.begin(), tokens.end(), Vocabulary::kEos);
  if (eos == tokens.end()) throw ValidationError("caption has no EOS");
  const std::size_t n_targets = static_cast<std::size_t>(eos - tokens.begin());
  if (n_targets == 0) throw ValidationError("caption has no BOS before EOS");
  const std::vector<TokenId> inputs(tokens.begin(), eos);
  num::Var logp = num::log_softmax(decode_logits(inputs, enc_out, cfg, params));
  std::vector<std::pair<std::size_t, std::size_t>> picks;
  for (std::size_t p = 0; p < n_targets; ++p) picks.emplace_back(p, tokens[p + 1]);
  return num::scale(num::sum(num::gather_elements(logp, picks)), -1.0 / static_cast<double>(n_targets));
}

std::vector<double> step_distribution(const std::vector<TokenId>& prefix, num::Var enc_out,
                                      const CaptionerConfig& cfg, const CaptionerParams& params) {
  if (prefix.size() >= cfg.max_len) throw ContractError("step_distribution: prefix already at max_len");
  num::Var logits = decode_logits(prefix, enc_out, cfg, params);
  num::Var last = num::log_softmax(num::row(logits, prefix.size() - 1));
  return {last.value().data().begin(), last.value().data().end()};
}

num::Tensor region_matrix(const std::vector<std::vector<double>>& region_visual) {
  if (region_visual.empty()) throw ContractError("region_matrix: no regions");
  num::Tensor t(num::Shape{region_visual.size(), region_visual.front().size()});
  for (std::size_t i = 0; i < region_visual.size(); ++i) {
    if (region_visual[i].size() != t.cols()) throw DimensionError("ragged region vectors");
    std::copy(region_visual[i].begin(), region_visual[i].end(),
              t.data().begin() + static_cast<std::ptrdiff_t>(i * t.cols()));
  }
  return t;
}

std::vector<TokenId> caption_ids(const Vocabulary& vocab, const Tokens& caption) {
  std::vector<TokenId> ids = {Vocabulary::kBos};
  for (const auto& t : caption) ids.push_back(vocab.id(t));
  ids.push_back(Vocabulary::kEos);
  return ids;
}

Captioner::Captioner(CaptionerConfig cfg, Vocabulary vocab, std::uint64_t seed)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)) {
  cfg_.validate();
  Rng rng(seed);
  params_ = CaptionerParams(cfg_, vocab_.size(), rng);
}

num::Var CaptionerScorer::log_prob_rows(num::Tape& tape, const std::vector<TokenId>& inputs) const {
  if (&tape != &enc_out_.tape()) throw ContractError("CaptionerScorer: encoder output lives on another tape");
  return num::log_softmax(decode_logits(inputs, enc_out_, model_.config(), model_.params()));
}

// ---------------------------------------------------------------------------
// Cached inference. Mirrors decode_logits row by row with the same kernels, so
// log-probabilities agree bitwise with the tape path.

struct CaptionerLm::CachedState : decoder::LanguageModel::State {
  std::shared_ptr<const CachedState> parent;
  std::size_t pos = 0;
  std::vector<std::vector<double>> k;  // per layer, d_model
  std::vector<std::vector<double>> v;
};

namespace {

std::vector<double> affine(const num::Linear& lin, std::span<const double> x) {
  const std::size_t in = lin.in_dim(), out = lin.out_dim();
  std::vector<double> y(out);
  num::kernels::matmul(x, lin.w.data(), y, 1, in, out);
  for (std::size_t j = 0; j < out; ++j) y[j] += lin.b[j];
  return y;
}

std::vector<double> norm_row(const num::LayerNorm& ln, std::span<const double> x) {
  std::vector<double> y(x.size());
  double mean = 0.0, rstd = 0.0;
  num::kernels::layer_norm(x, ln.gain.data(), ln.bias.data(), y, {&mean, 1}, {&rstd, 1}, 1, x.size());
  return y;
}

void add_into(std::vector<double>& x, const std::vector<double>& y) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] + y[i];
}

}  // namespace

CaptionerLm::CaptionerLm(const Captioner& model, const num::Tensor& regions) : model_(model) {
  const auto& cfg = model.config();
  const auto& params = model.params();
  num::Tape tape;
  num::Var enc = encode(tape, regions, cfg, params);
  num_regions_ = regions.rows();
  for (const auto& L : params.decoder) {
    const auto& kv = L.cross.k(enc).value();
    const auto& vv = L.cross.v(enc).value();
    cross_k_.emplace_back(kv.data().begin(), kv.data().end());
    cross_v_.emplace_back(vv.data().begin(), vv.data().end());
  }
}

std::size_t CaptionerLm::vocab_size() const { return model_.vocab().size(); }

decoder::LanguageModel::StatePtr CaptionerLm::start() const { return step(nullptr, Vocabulary::kBos); }

decoder::LanguageModel::StatePtr CaptionerLm::advance(const StatePtr& state, TokenId token) const {
  auto parent = std::dynamic_pointer_cast<const CachedState>(state);
  if (!parent) throw ContractError("CaptionerLm: foreign decoder state");
  if (parent->pos + 2 >= model_.config().max_len) {
    throw ContractError("CaptionerLm: prefix already at max_len");
  }
  if (token >= vocab_size()) throw ContractError("CaptionerLm: unknown token id");
  return step(std::move(parent), token);
}

decoder::LanguageModel::StatePtr CaptionerLm::step(std::shared_ptr<const CachedState> parent, TokenId token) const {
  const auto& cfg = model_.config();
  const auto& params = model_.params();
  const std::size_t d = cfg.d_model;
  auto st = std::make_shared<CachedState>();
  st->pos = parent ? parent->pos + 1 : 0;
  const std::size_t s = st->pos + 1;

  const auto emb = params.embedding.data().subspan(token * cfg.embed_dim, cfg.embed_dim);
  std::vector<double> x = affine(params.up, emb);
  add_into(x, positional_encoding(st->pos, d));

  // Prefix chain, oldest first.
  std::vector<const CachedState*> chain(s);
  chain[s - 1] = st.get();
  {
    const CachedState* p = parent.get();
    for (std::size_t i = s - 1; i-- > 0;) {
      chain[i] = p;
      p = p->parent.get();
    }
  }

  std::vector<double> keys(s * d), values(s * d), probs(std::max(s, num_regions_) * cfg.num_heads);
  std::vector<double> att(d);
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    const auto& L = params.decoder[l];
    const auto h = norm_row(L.self_norm, x);
    const auto q = affine(L.self.q, h);
    st->k.push_back(affine(L.self.k, h));
    st->v.push_back(affine(L.self.v, h));
    for (std::size_t j = 0; j < s; ++j) {
      std::copy(chain[j]->k[l].begin(), chain[j]->k[l].end(), keys.begin() + static_cast<std::ptrdiff_t>(j * d));
      std::copy(chain[j]->v[l].begin(), chain[j]->v[l].end(), values.begin() + static_cast<std::ptrdiff_t>(j * d));
    }
    num::kernels::attention(q, keys, values, 1, s, d, cfg.num_heads, nullptr, att, probs);
    add_into(x, affine(L.self.o, att));

    const auto hc = norm_row(L.cross_norm, x);
    const auto qc = affine(L.cross.q, hc);
    num::kernels::attention(qc, cross_k_[l], cross_v_[l], 1, num_regions_, d, cfg.num_heads, nullptr, att, probs);
    add_into(x, affine(L.cross.o, att));

    const auto hf = norm_row(L.ffn_norm, x);
    auto hidden = affine(L.ffn.up, hf);
    for (double& v : hidden) v = v > 0.0 ? v : 0.0;
    add_into(x, affine(L.ffn.down, hidden));
  }
  const auto out = affine(params.down, norm_row(params.dec_norm, x));
  st->log_probs.resize(vocab_size());
  num::kernels::matmul_nt(out, params.embedding.data(), st->log_probs, 1, cfg.embed_dim, vocab_size());
  num::kernels::log_softmax_inplace(st->log_probs);
  st->parent = std::move(parent);
  return st;
}

}  // namespace nocap::captioner
