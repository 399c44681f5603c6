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
#include <set>

#include "nocap/data/generator.hpp"
#include "nocap/error.hpp"
#include "nocap/selector/selector.hpp"

namespace nocap::data {
namespace {

DatasetConfig small_config(std::size_t train = 200, std::size_t eval = 61) {
  auto cfg = default_dataset_config();
  cfg.num_train = train;
  cfg.num_eval = eval;
  cfg.seed = 17;
  return cfg;
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n, mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TEST(GeneratorTest, FixedSeedIsBitIdentical) {
  const auto cfg = small_config(30, 10);
  EXPECT_EQ(gen_dataset(cfg), gen_dataset(cfg));
  EXPECT_EQ(to_jsonl(gen_dataset(cfg)), to_jsonl(gen_dataset(cfg)));
  auto other = cfg;
  other.seed = 18;
  EXPECT_NE(to_jsonl(gen_dataset(cfg)), to_jsonl(gen_dataset(other)));
}

TEST(GeneratorTest, BoxesStayInsideImageOverTenThousandScenes) {
  const auto cfg = small_config(10000, 0);
  const auto ds = gen_dataset(cfg);
  ASSERT_EQ(ds.size(), 10000u);
  for (const auto& s : ds) {
    EXPECT_NO_THROW(validate(s));
    ASSERT_GE(s.detections.size(), kMinDetections);
    ASSERT_LE(s.detections.size(), kMaxDetections);
    for (const auto& d : s.detections) {
      ASSERT_GT(d.box.w, 0.0);
      ASSERT_GT(d.box.h, 0.0);
      ASSERT_GE(d.box.x_c - d.box.w / 2, -1e-9);
      ASSERT_LE(d.box.x_c + d.box.w / 2, s.W + 1e-9);
      ASSERT_GE(d.box.y_c - d.box.h / 2, -1e-9);
      ASSERT_LE(d.box.y_c + d.box.h / 2, s.H + 1e-9);
      ASSERT_GE(d.score, 0.0);
      ASSERT_LE(d.score, 1.0);
    }
  }
}

TEST(GeneratorTest, ConfidenceRankCorrelatesWithArea) {
  const auto ds = gen_dataset(small_config(2000, 0));
  std::vector<double> area, score;
  for (const auto& s : ds) {
    for (const auto& d : s.detections) {
      area.push_back(d.box.w * d.box.h / (double(s.W) * s.H));
      score.push_back(d.score);
    }
  }
  const double rho = pearson(ranks(area), ranks(score));
  EXPECT_GT(rho, 0.0);
  EXPECT_LT(rho, 0.98);  // noisy proxy, not a copy of area
}

TEST(GeneratorTest, RegionVisualCarriesClassAndGeometry) {
  const auto cfg = small_config(5, 0);
  const auto embed = class_embeddings(cfg);
  for (const auto& s : gen_dataset(cfg)) {
    ASSERT_EQ(s.region_visual.size(), s.detections.size());
    for (std::size_t i = 0; i < s.detections.size(); ++i) {
      const auto& v = s.region_visual[i];
      ASSERT_EQ(v.size(), cfg.visual_dim());
      EXPECT_EQ(v.back(), s.detections[i].score);
      EXPECT_NEAR(v[0], embed[s.detections[i].class_id][0], 6 * cfg.visual_noise);
    }
  }
}

TEST(GeneratorTest, JsonlRoundTripIsByteIdentical) {
  const auto ds = gen_dataset(small_config(40, 20));
  const std::string text = to_jsonl(ds);
  EXPECT_EQ(to_jsonl(parse_jsonl(text)), text);
  EXPECT_EQ(parse_jsonl(text), ds);
}

TEST(CaptionTest, DominantObjectIsAlwaysMentioned) {
  const auto cfg = small_config();
  SceneRecord s;
  s.W = 400;
  s.H = 400;
  s.detections = {{29, "zebra", {200, 200, 320, 300}, 0.9},
                  {0, "dog", {20, 20, 10, 10}, 0.4},
                  {1, "cat", {380, 380, 8, 8}, 0.3}};
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    for (const auto& ref : gen_captions(s, rng, cfg)) {
      EXPECT_TRUE(cfg.synonym_table().mentioned_in(ref, "zebra")) << join(ref);
    }
  }
}

TEST(CaptionTest, MentionsComeFromDetectionsOnly) {
  const auto cfg = small_config(300, 0);
  const auto syn = cfg.synonym_table();
  for (const auto& s : gen_dataset(cfg)) {
    std::set<std::string> present;
    for (const auto& d : s.detections) present.insert(d.class_word);
    for (const auto& ref : s.references) {
      bool any = false;
      for (const auto& w : cfg.classes) {
        if (!syn.mentioned_in(ref, w)) continue;
        EXPECT_TRUE(present.count(w)) << w << " in '" << join(ref) << "'";
        any = true;
      }
      EXPECT_TRUE(any) << join(ref);
    }
  }
}

TEST(CaptionTest, ReferencesAreInVocabulary) {
  const auto cfg = small_config(300, 0);
  const auto vocab = build_vocabulary(cfg);
  for (const auto& s : gen_dataset(cfg)) {
    for (const auto& ref : s.references) {
      for (const auto& w : ref) EXPECT_TRUE(vocab.contains(w)) << w;
    }
  }
  for (const auto& w : cfg.heldout) EXPECT_TRUE(vocab.contains(w)) << w;
}

TEST(CaptionTest, GroundTruthHasAPositiveRegionPerScene) {
  const auto cfg = small_config(500, 0);
  const auto syn = cfg.synonym_table();
  for (const auto& s : gen_dataset(cfg)) {
    const auto gt = selector::build_ground_truth(s, syn);
    EXPECT_GE(std::count(gt.begin(), gt.end(), 1.0), 1);
  }
}

TEST(CaptionTest, SalientRegionsAreTopTwoByAreaPlusLarge) {
  SceneRecord s;
  s.W = 100;
  s.H = 100;
  s.detections = {{0, "dog", {50, 50, 10, 10}, 0.5},   // 0.01
                  {1, "cat", {50, 50, 60, 60}, 0.5},   // 0.36
                  {2, "car", {50, 50, 20, 20}, 0.5},   // 0.04
                  {3, "bus", {50, 50, 55, 50}, 0.5},   // 0.275
                  {4, "cow", {50, 50, 30, 30}, 0.5}};  // 0.09
  EXPECT_EQ(salient_regions(s, 0.25), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(salient_regions(s, 0.05), (std::vector<std::size_t>{1, 3, 4}));
}

TEST(HeldOutTest, CaptionerTrainNeverMentionsHeldOutClasses) {
  const auto cfg = small_config(400, 100);
  const auto syn = cfg.synonym_table();
  const auto ds = gen_dataset(cfg);
  const auto sp = apply_heldout(ds, cfg);
  for (const auto& s : sp.captioner_train) {
    for (const auto& ref : s.references) {
      for (const auto& w : cfg.heldout) {
        for (const auto& form : syn.forms(w)) EXPECT_EQ(std::count(ref.begin(), ref.end(), form), 0) << form;
      }
    }
  }
  EXPECT_LT(sp.captioner_train.size(), 400u);
  EXPECT_EQ(sp.selector_train.size(), sp.captioner_train.size());
}

TEST(HeldOutTest, SelectorMaySeeHeldOutScenesWhenAsked) {
  auto cfg = small_config(400, 0);
  cfg.selector_sees_heldout = true;
  const auto sp = apply_heldout(gen_dataset(cfg), cfg);
  EXPECT_EQ(sp.selector_train.size(), 400u);
}

TEST(HeldOutTest, ValAndTestAreBalanced) {
  for (std::size_t eval : {0u, 1u, 60u, 61u}) {
    const auto cfg = small_config(10, eval);
    const auto sp = apply_heldout(gen_dataset(cfg), cfg);
    EXPECT_EQ(sp.val.size() + sp.test.size(), eval);
    EXPECT_LE(std::max(sp.val.size(), sp.test.size()) - std::min(sp.val.size(), sp.test.size()), 1u);
  }
}

TEST(HeldOutTest, DefaultTestSplitHasOutDomainScenes) {
  const auto cfg = small_config(10, 200);
  const auto sp = apply_heldout(gen_dataset(cfg), cfg);
  const auto out = std::count_if(sp.test.begin(), sp.test.end(), [&](const SceneRecord& s) { return is_out_domain(s, cfg); });
  EXPECT_GT(out, 0);
  EXPECT_LT(static_cast<std::size_t>(out), sp.test.size());
}

TEST(HeldOutTest, UnknownHeldOutClassIsAConfigError) {
  auto cfg = small_config(10, 0);
  cfg.heldout.push_back("unicorn");
  EXPECT_THROW(apply_heldout({}, cfg), ConfigError);
  EXPECT_THROW(gen_dataset(cfg), ConfigError);
}

TEST(DatasetConfigTest, JsonRoundTrip) {
  auto cfg = small_config();
  cfg.salience_tau = 0.3;
  const auto back = nlohmann::json(cfg).get<DatasetConfig>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(cfg));
}

TEST(DatasetConfigTest, RejectsMultiWordClass) {
  auto cfg = small_config();
  cfg.classes.push_back("hot dog");
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace nocap::data
