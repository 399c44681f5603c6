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

#include "nocap/train/train.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "nocap/data/generator.hpp"
#include "nocap/error.hpp"
#include "nocap/numerics/checkpoint.hpp"

namespace nocap::train {
namespace {

data::Detection det(const std::string& word, double score) {
  data::Detection d;
  d.class_word = word;
  d.box = {50.0, 50.0, 40.0, 40.0};
  d.score = score;
  return d;
}

data::SceneRecord hand_scene() {
  data::SceneRecord s;
  s.W = s.H = 100;
  s.detections = {det("dog", 0.9), det("couch", 0.5), det("dog", 0.8), det("cat", 0.95)};
  s.region_visual.assign(4, std::vector<double>(22, 0.0));
  s.references = {tokenize("a dog sits near a sofa"), tokenize("a dog is beside the room")};
  return s;
}

captioner::CaptionerConfig tiny_captioner(const data::DatasetConfig& d) {
  captioner::CaptionerConfig c;
  c.d_model = 32;
  c.num_enc_layers = c.num_dec_layers = 1;
  c.num_heads = 2;
  c.num_memory = 4;
  c.embed_dim = 16;
  c.ffn_dim = 64;
  c.visual_dim = d.visual_dim();
  return c;
}

PipelineConfig tiny_pipeline(std::uint64_t seed) {
  PipelineConfig c;
  c.data.num_train = 60;
  c.data.num_eval = 20;
  c.data.seed = seed;
  c.captioner = tiny_captioner(c.data);
  c.train.seed = seed;
  c.train.selector_epochs = 2;
  c.train.captioner_epochs = 2;
  c.train.rl_epochs = 1;
  c.train.rl_scenes_per_epoch = 8;
  c.train.beam_size = 3;
  c.eval_modes = {ConstraintMode::kNone, ConstraintMode::kSelector, ConstraintMode::kOracle};
  return c;
}

TEST(ConstraintHelpers, ReferenceConstraintsFollowDetectionOrderAndSynonyms) {
  const auto syn = data::default_dataset_config().synonym_table();
  const auto s = hand_scene();
  EXPECT_EQ(reference_constraints(s, syn, 5), (std::vector<std::string>{"dog", "couch"}));
  EXPECT_EQ(reference_constraints(s, syn, 1), (std::vector<std::string>{"dog"}));
}

TEST(ConstraintHelpers, TopKCountsRegionsByConfidence) {
  const selector::SelectorConfig cfg;
  const auto s = hand_scene();
  EXPECT_EQ(top_k_constraints(s, cfg, 1), (std::vector<std::string>{"cat"}));
  EXPECT_EQ(top_k_constraints(s, cfg, 2), (std::vector<std::string>{"cat", "dog"}));
  EXPECT_EQ(top_k_constraints(s, cfg, 3), (std::vector<std::string>{"cat", "dog"}));
  EXPECT_EQ(top_k_constraints(s, cfg, 4), (std::vector<std::string>{"cat", "dog", "couch"}));
}

TEST(ConstraintHelpers, SelectionF1CountsWords) {
  const std::vector<std::vector<std::string>> selected = {{"a", "b"}, {"c"}, {}};
  const std::vector<std::vector<std::string>> truth = {{"a"}, {"c", "d"}, {}};
  EXPECT_DOUBLE_EQ(selection_f1(selected, truth), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(selection_f1({{}}, {{}}), 0.0);
}

TEST(ConstraintHelpers, ModesRoundTripAndSelectorModeNeedsModel) {
  for (auto m : all_modes()) EXPECT_EQ(constraint_mode_from_string(to_string(m)), m);
  EXPECT_THROW(constraint_mode_from_string("top9"), ConfigError);
  const auto syn = data::default_dataset_config().synonym_table();
  EXPECT_THROW(constraints_for(ConstraintMode::kSelector, hand_scene(), nullptr, syn, 5), ContractError);
  EXPECT_TRUE(constraints_for(ConstraintMode::kNone, hand_scene(), nullptr, syn, 5).empty());
  EXPECT_EQ(constraints_for(ConstraintMode::kOracle, hand_scene(), nullptr, syn, 1).size(), 1u);
}

TEST(SelectorTraining, ConstantHalfPredictorLossIsLn2) {
  selector::RegionSelector sel(selector::SelectorConfig{}, 3);
  for (auto& [name, t] : sel.named()) {
    if (name.find("head") != std::string::npos) std::fill(t->data().begin(), t->data().end(), 0.0);
  }
  auto dcfg = data::default_dataset_config();
  dcfg.num_train = 6;
  dcfg.num_eval = 0;
  const auto scene = data::gen_dataset(dcfg)[5];
  const auto idx = selector::top_proposals(scene, sel.config());
  std::vector<double> targets(idx.size());
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = static_cast<double>(i % 2);
  num::Tape tape;
  auto y = selector::selector_forward(tape, selector::scene_features(scene, idx), selector::scene_classes(scene, idx),
                                      sel.config(), sel.params());
  EXPECT_NEAR(selector::weighted_bce(y, targets, 1.0, 1.0).value().item(), std::log(2.0), 1e-12);
  EXPECT_NEAR(selector::weighted_bce(y, targets, 0.3, 0.3).value().item(), 0.3 * std::log(2.0), 1e-12);
}

TEST(SelectorTraining, LossDecreasesThenPlateaus) {
  const auto dcfg = data::default_dataset_config();
  const auto splits = data::apply_heldout(data::gen_dataset(dcfg), dcfg);
  TrainConfig cfg;
  cfg.selector_epochs = 5;
  selector::RegionSelector sel(selector::SelectorConfig{}, 1001);
  const auto logs = train_selector(sel, splits.selector_train, {}, dcfg.synonym_table(), cfg);
  ASSERT_EQ(logs.size(), 5u);
  EXPECT_LT(logs[1].train_loss, logs[0].train_loss);
  EXPECT_LT(logs[2].train_loss, logs[1].train_loss);
  for (std::size_t i = 3; i < logs.size(); ++i) EXPECT_LT(logs[i].train_loss, logs[1].train_loss) << "epoch " << i + 1;
}

TEST(SelectorTraining, NonFiniteWeightsAbort) {
  auto dcfg = data::default_dataset_config();
  dcfg.num_train = 20;
  dcfg.num_eval = 0;
  const auto scenes = data::gen_dataset(dcfg);
  selector::RegionSelector sel(selector::SelectorConfig{}, 1);
  sel.named().front().second->data()[0] = std::nan("");
  TrainConfig cfg;
  cfg.selector_epochs = 1;
  EXPECT_THROW(train_selector(sel, scenes, {}, dcfg.synonym_table(), cfg), DivergenceError);
}

TEST(CaptionerTraining, OverfitsTenScenes) {
  auto dcfg = data::default_dataset_config();
  dcfg.num_train = 10;
  dcfg.num_eval = 0;
  auto scenes = data::gen_dataset(dcfg);
  for (auto& s : scenes) s.references.assign(2, s.references.front());
  captioner::Captioner cap(tiny_captioner(dcfg), data::build_vocabulary(dcfg), 7);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.warmup = 50;
  cfg.captioner_epochs = 60;
  const auto logs = pretrain_captioner(cap, scenes, {}, cfg);
  EXPECT_LT(mean_token_nll(cap, scenes), 0.1);
  EXPECT_LT(logs.back().train_loss, logs.front().train_loss);
}

TEST(CaptionerTraining, PerplexityBelowVocabularyAfterOneEpoch) {
  auto dcfg = data::default_dataset_config();
  dcfg.num_train = 200;
  dcfg.num_eval = 40;
  const auto splits = data::apply_heldout(data::gen_dataset(dcfg), dcfg);
  const auto vocab = data::build_vocabulary(dcfg);
  captioner::Captioner cap(tiny_captioner(dcfg), vocab, 11);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.captioner_epochs = 1;
  const auto logs = pretrain_captioner(cap, splits.captioner_train, splits.val, cfg);
  ASSERT_EQ(logs.size(), 1u);
  EXPECT_LT(logs[0].val.at("perplexity"), static_cast<double>(vocab.size()));
}

TEST(CaptionerTraining, NonFiniteRegionsAbort) {
  auto dcfg = data::default_dataset_config();
  dcfg.num_train = 8;
  dcfg.num_eval = 0;
  auto scenes = data::gen_dataset(dcfg);
  scenes[2].region_visual[0][0] = std::nan("");
  captioner::Captioner cap(tiny_captioner(dcfg), data::build_vocabulary(dcfg), 1);
  TrainConfig cfg;
  cfg.captioner_epochs = 1;
  EXPECT_THROW(pretrain_captioner(cap, scenes, {}, cfg), DivergenceError);
}

class ScstTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dcfg.num_train = 12;
    dcfg.num_eval = 0;
    scenes = data::gen_dataset(dcfg);
    model = std::make_unique<captioner::Captioner>(tiny_captioner(dcfg), data::build_vocabulary(dcfg), 5);
    TrainConfig pre;
    pre.batch_size = 4;
    pre.warmup = 20;
    pre.captioner_epochs = 3;
    pretrain_captioner(*model, scenes, {}, pre);
    std::vector<std::vector<Tokens>> refs;
    for (const auto& s : scenes) refs.push_back(s.references);
    idf = metrics::IdfTable(refs);
  }

  std::vector<double> grads() {
    std::vector<double> g;
    for (auto& [name, t] : model->named()) g.insert(g.end(), t->grad().begin(), t->grad().end());
    return g;
  }

  data::DatasetConfig dcfg = data::default_dataset_config();
  std::vector<data::SceneRecord> scenes;
  std::unique_ptr<captioner::Captioner> model;
  metrics::IdfTable idf;
};

TEST_F(ScstTest, RewardEqualToBaselineGivesZeroGradient) {
  TrainConfig cfg;
  cfg.beam_size = 1;
  const auto syn = dcfg.synonym_table();
  const auto named = model->named();
  num::enable_grads(named);
  num::zero_grads(named);
  const decoder::ConstraintSet cs(reference_constraints(scenes[0], syn, 5), model->vocab());
  const auto st = scst_accumulate(*model, scenes[0], cs, idf, cfg, 1.0);
  ASSERT_EQ(st.samples, 1u);
  EXPECT_EQ(st.mean_reward, st.mean_baseline);
  for (double g : grads()) ASSERT_EQ(g, 0.0);
}

TEST_F(ScstTest, GradientMatchesAdvantageWeightedSequenceGradients) {
  TrainConfig cfg;
  cfg.beam_size = 4;
  const auto syn = dcfg.synonym_table();
  const auto& scene = scenes[1];
  const decoder::ConstraintSet cs(reference_constraints(scene, syn, 5), model->vocab());
  const auto named = model->named();
  num::enable_grads(named);

  decoder::SearchOptions opts;
  opts.beam_size = cfg.beam_size;
  opts.max_tokens = model->config().max_len - 1;
  const auto regions = captioner::region_matrix(scene.region_visual);
  const auto res = decoder::grid_beam_search(model->language_model(regions), cs, opts);
  ASSERT_GE(res.finalists.size(), 2u);
  std::vector<double> rewards;
  double baseline = 0.0;
  for (const auto& h : res.finalists) {
    rewards.push_back(metrics::cider_d(model->vocab().decode(h.tokens), scene.references, idf));
    baseline += rewards.back() / static_cast<double>(res.finalists.size());
  }
  std::vector<double> expected(grads().size(), 0.0);
  for (std::size_t i = 0; i < res.finalists.size(); ++i) {
    num::zero_grads(named);
    num::Tape tape;
    captioner::CaptionerScorer scorer(*model, captioner::encode(tape, regions, model->config(), model->params()));
    const auto& h = res.finalists[i];
    tape.backward(decoder::dgbs_sequence_logprob(tape, h.tokens, h.forced_positions, scorer));
    const auto g = grads();
    for (std::size_t k = 0; k < g.size(); ++k) expected[k] -= 0.5 * (rewards[i] - baseline) * g[k];
  }
  num::zero_grads(named);
  scst_accumulate(*model, scene, cs, idf, cfg, 0.5);
  const auto got = grads();
  double scale = 0.0;
  for (double e : expected) scale = std::max(scale, std::abs(e));
  ASSERT_GT(scale, 0.0);
  for (std::size_t k = 0; k < got.size(); ++k) ASSERT_NEAR(got[k], expected[k], 1e-12 * std::max(1.0, scale)) << k;
}

TEST_F(ScstTest, FinetuneKeepsBestValidationCheckpoint) {
  TrainConfig cfg;
  cfg.rl_epochs = 2;
  cfg.beam_size = 3;
  cfg.rl_lr = 1e-2;
  cfg.rl_scenes_per_epoch = 6;
  const std::vector<data::SceneRecord> val(scenes.begin(), scenes.begin() + 4);
  const auto logs = finetune_scst_dgbs(*model, scenes, val, dcfg, cfg);
  ASSERT_EQ(logs.size(), 3u);
  double best = 0.0;
  for (const auto& l : logs) best = std::max(best, l.val.at("cider_d"));
  const auto run = decode_eval(*model, nullptr, val, ConstraintMode::kOracle, dcfg, cfg);
  EXPECT_DOUBLE_EQ(run.report.overall.cider_d, best);
}

TEST(DecodeEval, ConstrainedCaptionsContainEveryWord) {
  auto dcfg = data::default_dataset_config();
  dcfg.num_train = 0;
  dcfg.num_eval = 30;
  const auto scenes = data::gen_dataset(dcfg);
  captioner::Captioner cap(tiny_captioner(dcfg), data::build_vocabulary(dcfg), 3);
  TrainConfig cfg;
  std::ostringstream trace;
  const auto run = decode_eval(cap, nullptr, scenes, ConstraintMode::kTop3, dcfg, cfg, &trace);
  EXPECT_EQ(run.constrained, scenes.size());
  EXPECT_EQ(run.satisfied, run.constrained);
  std::istringstream lines(trace.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    ASSERT_TRUE(j.contains("scene_id") && j.contains("t") && j.contains("c"));
    ++n;
  }
  EXPECT_GT(n, scenes.size());
}

TEST(Pipeline, ConfigRoundTripAndValidation) {
  const auto c = tiny_pipeline(4);
  const nlohmann::json j = c;
  EXPECT_EQ(nlohmann::json(pipeline_config_from_json(j)), j);
  auto bad = c;
  bad.captioner.visual_dim = 5;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(pipeline_config_from_json({{"train", {{"baseline", "median"}}}}), ConfigError);
  EXPECT_THROW(pipeline_config_from_json({{"eval_modes", {"bogus"}}}), ConfigError);
  EXPECT_EQ(pipeline_config_from_json({{"seed", 9}}).train.seed, 9u);
}

TEST(Pipeline, SameSeedIsByteIdentical) {
  const auto a = run_pipeline(tiny_pipeline(2));
  const auto b = run_pipeline(tiny_pipeline(2));
  EXPECT_EQ(a.report.dump(), b.report.dump());
  EXPECT_EQ(a.checkpoints, b.checkpoints);
  ASSERT_TRUE(a.report.contains("checkpoints"));
  EXPECT_EQ(a.report["checkpoints"]["captioner_scst"], num::content_hash(a.checkpoints.at("captioner_scst")));
  const auto c = run_pipeline(tiny_pipeline(3));
  EXPECT_NE(a.report["checkpoints"].dump(), c.report["checkpoints"].dump());
}

}  // namespace
}  // namespace nocap::train
