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
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nocap/data/scene.hpp"
#include "nocap/numerics/random.hpp"
#include "nocap/text.hpp"

namespace nocap::data {

struct DatasetConfig {
  std::size_t num_train = 2000;
  std::size_t num_eval = 400;  // split 50/50 into val and test
  std::vector<std::string> classes;
  std::vector<std::string> heldout;
  std::map<std::string, std::vector<std::string>> synonyms;
  double salience_tau = 0.25;     // area fraction that always makes an object salient
  double mention_dropout = 0.3;   // per-caption chance of dropping one non-largest mention
  std::size_t num_references = 3;
  double min_area = 0.005;
  double max_area = 0.6;
  double score_noise = 0.12;
  std::size_t class_embed_dim = 16;
  double visual_noise = 0.1;
  bool selector_sees_heldout = false;
  std::uint64_t seed = 1;

  void validate() const;
  SynonymTable synonym_table() const { return SynonymTable(synonyms); }
  std::size_t visual_dim() const { return class_embed_dim + 6; }
};

// 30 single-token classes with the usual 8 held out.
DatasetConfig default_dataset_config();

void to_json(nlohmann::json& j, const DatasetConfig& c);
void from_json(const nlohmann::json& j, DatasetConfig& c);

// Every token the caption grammar can emit, plus class words and their forms.
Vocabulary build_vocabulary(const DatasetConfig& cfg);

// Fixed per-class appearance vectors shared by every scene of a dataset.
std::vector<std::vector<double>> class_embeddings(const DatasetConfig& cfg);

// Indices of salient detections: top-2 by area plus any above tau.
std::vector<std::size_t> salient_regions(const SceneRecord& scene, double tau);

SceneRecord gen_scene(Rng& rng, const DatasetConfig& cfg, std::uint64_t scene_id, Split split,
                      const std::vector<std::vector<double>>& class_embed);
std::vector<Tokens> gen_captions(const SceneRecord& scene, Rng& rng, const DatasetConfig& cfg);

// All splits; scene i draws from its own stream forked from cfg.seed.
std::vector<SceneRecord> gen_dataset(const DatasetConfig& cfg);

struct HeldOutSplits {
  std::vector<SceneRecord> captioner_train;
  std::vector<SceneRecord> selector_train;
  std::vector<SceneRecord> val;
  std::vector<SceneRecord> test;
};

bool mentions_any(const SceneRecord& scene, const std::vector<std::string>& words, const SynonymTable& syn);
bool is_out_domain(const SceneRecord& scene, const DatasetConfig& cfg);

HeldOutSplits apply_heldout(const std::vector<SceneRecord>& dataset, const DatasetConfig& cfg);

}  // namespace nocap::data
