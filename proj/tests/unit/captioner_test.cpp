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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "encoder_oracle.hpp"
#include "grad_check.hpp"
#include "nocap/captioner/captioner.hpp"
#include "nocap/error.hpp"

namespace nocap::captioner {
namespace {

using nocap::testing::check_gradients;
using nocap::testing::Mat;
using nocap::testing::naive_encode;
using nocap::testing::random_tensor;

Vocabulary small_vocab() { return Vocabulary({"a", "dog", "on", "the", "grass", "cat"}); }

CaptionerConfig tiny_config() {
  CaptionerConfig cfg;
  cfg.d_model = 8;
  cfg.num_enc_layers = 1;
  cfg.num_dec_layers = 1;
  cfg.num_heads = 2;
  cfg.num_memory = 2;
  cfg.embed_dim = 6;
  cfg.ffn_dim = 12;
  cfg.max_len = 8;
  cfg.visual_dim = 5;
  return cfg;
}

num::Tensor random_regions(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  return random_tensor({n, dim}, rng);
}

std::vector<double> values_of(num::Var v) { return {v.value().data().begin(), v.value().data().end()}; }

void expect_matches(num::Var got, const Mat& want, double tol) {
  ASSERT_EQ(got.value().rows(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    for (std::size_t j = 0; j < want[i].size(); ++j) EXPECT_NEAR(got.value().at(i, j), want[i][j], tol);
  }
}

TEST(EncoderTest, MemoryBlockMatchesNaiveLoops) {
  Captioner model(tiny_config(), small_vocab(), 3);
  const auto regions = random_regions(4, 5, 11);
  num::Tape tape;
  expect_matches(encode(tape, regions, model.config(), model.params()), naive_encode(regions, model.params()), 1e-12);
}

TEST(EncoderTest, ZeroMemoryIsPlainTransformerEncoder) {
  auto cfg = tiny_config();
  cfg.num_memory = 0;
  cfg.num_enc_layers = 2;
  Captioner model(cfg, small_vocab(), 5);
  for (const auto& [name, t] : model.named()) EXPECT_EQ(name.find("mem_"), std::string::npos) << name;
  const auto regions = random_regions(3, 5, 12);
  num::Tape tape;
  expect_matches(encode(tape, regions, cfg, model.params()), naive_encode(regions, model.params()), 1e-12);
}

TEST(EncoderTest, OutputHasOneRowPerRegion) {
  Captioner model(tiny_config(), small_vocab(), 3);
  for (std::size_t n : {1u, 2u, 7u}) {
    num::Tape tape;
    const auto out = encode(tape, random_regions(n, 5, n), model.config(), model.params());
    EXPECT_EQ(out.value().shape(), (num::Shape{n, 8}));
  }
}

TEST(EncoderTest, RejectsWrongVisualWidth) {
  Captioner model(tiny_config(), small_vocab(), 3);
  num::Tape tape;
  EXPECT_THROW(encode(tape, random_regions(2, 4, 1), model.config(), model.params()), DimensionError);
}

TEST(EncoderTest, MemorySlotsCarryGradient) {
  auto cfg = tiny_config();
  Captioner model(cfg, small_vocab(), 9);
  auto& L = model.params().encoder[0];
  const auto regions = random_regions(3, 5, 2);
  const std::vector<TokenId> caption = {Vocabulary::kBos, 4, 5, Vocabulary::kEos};
  auto loss = [&](num::Tape& tape) {
    return xent_loss(caption, encode(tape, regions, cfg, model.params()), cfg, model.params());
  };
  const auto res = check_gradients(loss, {&L.mem_k, &L.mem_v});
  EXPECT_EQ(res.checked, 2u * 2u * 8u);
  EXPECT_LT(res.max_rel_error, 1e-6);
  EXPECT_LT(res.max_small_abs_error, 1e-8);
}

TEST(DecoderTest, LogitsShapeIsLenByVocab) {
  Captioner model(tiny_config(), small_vocab(), 3);
  num::Tape tape;
  auto enc = encode(tape, random_regions(3, 5, 1), model.config(), model.params());
  const auto logits = decode_logits({Vocabulary::kBos, 4, 5}, enc, model.config(), model.params());
  EXPECT_EQ(logits.value().shape(), (num::Shape{3, model.vocab().size()}));
}

TEST(DecoderTest, IsCausal) {
  Captioner model(tiny_config(), small_vocab(), 3);
  const auto regions = random_regions(3, 5, 1);
  num::Tape tape;
  auto enc = encode(tape, regions, model.config(), model.params());
  const auto a = decode_logits({1, 4, 5, 6, 7}, enc, model.config(), model.params()).value();
  for (TokenId changed : {4u, 8u, 9u}) {
    const auto b = decode_logits({1, 4, 5, changed, 7}, enc, model.config(), model.params()).value();
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < a.cols(); ++j) EXPECT_EQ(a.at(i, j), b.at(i, j));
    }
  }
}

TEST(DecoderTest, TrailingPadsDoNotChangeLoss) {
  Captioner model(tiny_config(), small_vocab(), 3);
  const auto regions = random_regions(3, 5, 1);
  num::Tape tape;
  auto enc = encode(tape, regions, model.config(), model.params());
  const double plain = xent_loss({1, 4, 5, 2}, enc, model.config(), model.params()).value().item();
  const double padded = xent_loss({1, 4, 5, 2, 0, 0}, enc, model.config(), model.params()).value().item();
  EXPECT_EQ(plain, padded);
}

TEST(DecoderTest, PadKeysAreIgnored) {
  Captioner model(tiny_config(), small_vocab(), 3);
  num::Tape tape;
  auto enc = encode(tape, random_regions(3, 5, 1), model.config(), model.params());
  auto& E = model.params().embedding;
  const auto before = decode_logits({1, 4, 0, 5}, enc, model.config(), model.params()).value();
  for (std::size_t j = 0; j < E.cols(); ++j) E.at(0, j) += 1.0;
  const auto after = decode_logits({1, 4, 0, 5}, enc, model.config(), model.params()).value();
  EXPECT_NE(before.at(3, 0), after.at(3, 0));  // tied head column
  for (std::size_t i : {0u, 1u, 3u}) {
    for (std::size_t j = 1; j < before.cols(); ++j) EXPECT_EQ(before.at(i, j), after.at(i, j));
  }
}

TEST(DecoderTest, ZeroHeadGivesUniformDistribution) {
  Captioner model(tiny_config(), small_vocab(), 3);
  std::fill(model.params().down.w.data().begin(), model.params().down.w.data().end(), 0.0);
  std::fill(model.params().down.b.data().begin(), model.params().down.b.data().end(), 0.0);
  num::Tape tape;
  auto enc = encode(tape, random_regions(2, 5, 1), model.config(), model.params());
  const auto lp = step_distribution({1, 4}, enc, model.config(), model.params());
  const double v = static_cast<double>(model.vocab().size());
  for (double x : lp) EXPECT_NEAR(x, -std::log(v), 1e-12);
}

TEST(DecoderTest, HeadIsTiedToEmbedding) {
  Captioner model(tiny_config(), small_vocab(), 3);
  num::Tape tape;
  auto enc = encode(tape, random_regions(2, 5, 1), model.config(), model.params());
  const auto before = decode_logits({1}, enc, model.config(), model.params()).value();
  auto& E = model.params().embedding;
  for (std::size_t j = 0; j < E.cols(); ++j) E.at(7, j) = 0.0;
  const auto after = decode_logits({1}, enc, model.config(), model.params()).value();
  EXPECT_EQ(after.at(0, 7), 0.0);
  EXPECT_EQ(before.at(0, 4), after.at(0, 4));
}

TEST(DecoderTest, MissingEosIsRejected) {
  Captioner model(tiny_config(), small_vocab(), 3);
  num::Tape tape;
  auto enc = encode(tape, random_regions(2, 5, 1), model.config(), model.params());
  EXPECT_THROW(xent_loss({1, 4, 5}, enc, model.config(), model.params()), ValidationError);
}

TEST(DecoderTest, SequenceMustStartWithBos) {
  Captioner model(tiny_config(), small_vocab(), 3);
  num::Tape tape;
  auto enc = encode(tape, random_regions(2, 5, 1), model.config(), model.params());
  EXPECT_THROW(decode_logits({4, 5}, enc, model.config(), model.params()), ContractError);
  EXPECT_THROW(decode_logits({1, 99}, enc, model.config(), model.params()), ContractError);
}

TEST(DecoderTest, StepDistributionMatchesLastLogitRow) {
  Captioner model(tiny_config(), small_vocab(), 3);
  num::Tape tape;
  auto enc = encode(tape, random_regions(3, 5, 1), model.config(), model.params());
  const std::vector<TokenId> prefix = {1, 4, 6};
  const auto lp = step_distribution(prefix, enc, model.config(), model.params());
  const auto logits = decode_logits(prefix, enc, model.config(), model.params()).value();
  double z = 0.0, mx = -1e300;
  for (std::size_t j = 0; j < logits.cols(); ++j) mx = std::max(mx, logits.at(2, j));
  for (std::size_t j = 0; j < logits.cols(); ++j) z += std::exp(logits.at(2, j) - mx);
  double total = 0.0;
  for (std::size_t j = 0; j < lp.size(); ++j) {
    EXPECT_NEAR(lp[j], logits.at(2, j) - mx - std::log(z), 1e-12);
    total += std::exp(lp[j]);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(DecoderTest, StepDistributionRespectsMaxLen) {
  Captioner model(tiny_config(), small_vocab(), 3);
  num::Tape tape;
  auto enc = encode(tape, random_regions(3, 5, 1), model.config(), model.params());
  const std::vector<TokenId> full(8, 4);
  std::vector<TokenId> prefix = full;
  prefix[0] = Vocabulary::kBos;
  EXPECT_THROW(step_distribution(prefix, enc, model.config(), model.params()), ContractError);
}

TEST(CaptionerLmTest, CachedPathEqualsTapePathBitwise) {
  auto cfg = tiny_config();
  cfg.num_dec_layers = 2;
  Captioner model(cfg, small_vocab(), 21);
  const auto regions = random_regions(4, 5, 8);
  const auto lm = model.language_model(regions);
  num::Tape tape;
  auto enc = encode(tape, regions, cfg, model.params());
  std::vector<TokenId> prefix = {Vocabulary::kBos};
  auto state = lm.start();
  Rng rng(4);
  while (true) {
    EXPECT_EQ(state->log_probs, step_distribution(prefix, enc, cfg, model.params()));
    if (prefix.size() + 1 == cfg.max_len) break;
    const TokenId next = 4 + rng.index(model.vocab().size() - 4);
    prefix.push_back(next);
    state = lm.advance(state, next);
  }
  EXPECT_THROW(lm.advance(state, 4), ContractError);
}

TEST(CaptionerLmTest, BranchesShareParentsWithoutInterference) {
  Captioner model(tiny_config(), small_vocab(), 21);
  const auto regions = random_regions(2, 5, 8);
  const auto lm = model.language_model(regions);
  auto root = lm.start();
  auto a = lm.advance(root, 4);
  auto b = lm.advance(root, 5);
  auto a2 = lm.advance(a, 6);
  auto a_again = lm.advance(root, 4);
  EXPECT_EQ(a->log_probs, a_again->log_probs);
  EXPECT_NE(a->log_probs, b->log_probs);
  EXPECT_EQ(lm.advance(a_again, 6)->log_probs, a2->log_probs);
}

TEST(CaptionerTest, FullModelGradientsMatchFiniteDifferences) {
  auto cfg = tiny_config();
  Captioner model(cfg, small_vocab(), 13);
  const auto regions = random_regions(3, 5, 3);
  const std::vector<TokenId> caption = {1, 4, 5, 6, 2};
  auto loss = [&](num::Tape& tape) {
    return xent_loss(caption, encode(tape, regions, cfg, model.params()), cfg, model.params());
  };
  std::vector<num::Tensor*> params;
  for (const auto& [name, t] : model.named()) params.push_back(t);
  const auto res = check_gradients(loss, params, 1e-5, 6);
  EXPECT_GT(res.checked, 100u);
  EXPECT_LT(res.max_rel_error, 1e-5);
  EXPECT_LT(res.max_small_abs_error, 1e-8);
}

TEST(CaptionerTest, SameSeedSameParameters) {
  Captioner a(tiny_config(), small_vocab(), 42), b(tiny_config(), small_vocab(), 42), c(tiny_config(), small_vocab(), 43);
  EXPECT_EQ(num::serialize_checkpoint(a.named()), num::serialize_checkpoint(b.named()));
  EXPECT_NE(num::serialize_checkpoint(a.named()), num::serialize_checkpoint(c.named()));
}

TEST(CaptionerTest, CheckpointRoundTripRestoresOutputs) {
  Captioner a(tiny_config(), small_vocab(), 42), b(tiny_config(), small_vocab(), 7);
  num::restore_checkpoint(num::deserialize_checkpoint(num::serialize_checkpoint(a.named())), b.named());
  const auto regions = random_regions(3, 5, 3);
  auto s = a.language_model(regions).start();
  auto t = b.language_model(regions).start();
  EXPECT_EQ(s->log_probs, t->log_probs);
}

TEST(CaptionerTest, ConfigJsonRoundTrip) {
  auto cfg = tiny_config();
  cfg.num_memory = 3;
  const CaptionerConfig back = nlohmann::json(cfg).get<CaptionerConfig>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(cfg));
}

TEST(CaptionerTest, InvalidConfigRejected) {
  auto cfg = tiny_config();
  cfg.num_heads = 3;
  EXPECT_THROW(Captioner(cfg, small_vocab(), 1), ConfigError);
}

TEST(CaptionerTest, CaptionIdsWrapWithBosEos) {
  const auto v = small_vocab();
  EXPECT_EQ(caption_ids(v, {"a", "dog"}), (std::vector<TokenId>{1, 4, 5, 2}));
}

}  // namespace
}  // namespace nocap::captioner
