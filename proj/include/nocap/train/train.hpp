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
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nocap/captioner/captioner.hpp"
#include "nocap/data/generator.hpp"
#include "nocap/decoder/search.hpp"
#include "nocap/metrics/metrics.hpp"
#include "nocap/selector/selector.hpp"

namespace nocap::train {

enum class ConstraintMode { kNone, kTop1, kTop2, kTop3, kSelector, kOracle };

ConstraintMode constraint_mode_from_string(const std::string& s);
std::string to_string(ConstraintMode m);
const std::vector<ConstraintMode>& all_modes();

enum class Baseline { kMeanBeam, kGreedy };

// Desk-scale defaults.
struct TrainConfig {
  std::size_t batch_size = 16;
  int warmup = 400;
  double rl_lr = 1e-5;
  std::size_t selector_epochs = 8;
  std::size_t captioner_epochs = 8;
  std::size_t rl_epochs = 2;
  std::size_t rl_scenes_per_epoch = 0;  // 0 = every training scene
  std::size_t beam_size = 5;
  std::size_t max_constraints = 5;
  decoder::ScoreMode score_mode = decoder::ScoreMode::kSum;
  Baseline baseline = Baseline::kMeanBeam;
  std::uint64_t seed = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::map<std::string, double> val;  // phase-specific validation numbers
};

nlohmann::json to_json(const std::vector<EpochLog>& logs);

// Class words detected in the scene and mentioned by some reference, in
// detection order, deduplicated and capped.
std::vector<std::string> reference_constraints(const data::SceneRecord& scene, const SynonymTable& syn,
                                               std::size_t cap);

// Words of the k most confident eligible detections, deduplicated.
std::vector<std::string> top_k_constraints(const data::SceneRecord& scene, const selector::SelectorConfig& cfg,
                                           std::size_t k);

// Micro-averaged F1 between selected word sets and reference word sets.
double selection_f1(const std::vector<std::vector<std::string>>& selected,
                    const std::vector<std::vector<std::string>>& truth);

std::vector<EpochLog> train_selector(selector::RegionSelector& model, const std::vector<data::SceneRecord>& train,
                                     const std::vector<data::SceneRecord>& val, const SynonymTable& syn,
                                     const TrainConfig& cfg);

// Mean per-token negative log-likelihood of every reference of `scenes`.
double mean_token_nll(const captioner::Captioner& model, const std::vector<data::SceneRecord>& scenes);

std::vector<EpochLog> pretrain_captioner(captioner::Captioner& model, const std::vector<data::SceneRecord>& train,
                                         const std::vector<data::SceneRecord>& val, const TrainConfig& cfg);

struct DecodedScene {
  std::uint64_t scene_id = 0;
  std::vector<std::string> constraints;
  Tokens caption;
  bool finished = false;
  bool satisfied = false;  // every constraint word is a token of the caption
};

struct EvalRun {
  ConstraintMode mode = ConstraintMode::kNone;
  std::vector<DecodedScene> decoded;
  metrics::EvalReport report;
  std::size_t constrained = 0;
  std::size_t satisfied = 0;
};

std::vector<std::string> constraints_for(ConstraintMode mode, const data::SceneRecord& scene,
                                         const selector::RegionSelector* selector, const SynonymTable& syn,
                                         std::size_t cap);

EvalRun decode_eval(const captioner::Captioner& model, const selector::RegionSelector* selector,
                    const std::vector<data::SceneRecord>& scenes, ConstraintMode mode, const data::DatasetConfig& dcfg,
                    const TrainConfig& cfg, std::ostream* trace = nullptr);

nlohmann::json to_json(const EvalRun& run, bool with_captions);

struct ScstStats {
  double mean_reward = 0.0;
  double mean_baseline = 0.0;
  std::size_t samples = 0;
};

// One self-critical gradient accumulation for a single scene; returns the
// rewards used. Gradients are added to the model's parameter buffers.
ScstStats scst_accumulate(const captioner::Captioner& model, const data::SceneRecord& scene,
                          const decoder::ConstraintSet& constraints, const metrics::IdfTable& idf,
                          const TrainConfig& cfg, double weight);

// Fine-tunes in place and leaves the best validation-CIDEr-D parameters
// (epoch 0 = the pretrained model included).
std::vector<EpochLog> finetune_scst_dgbs(captioner::Captioner& model, const std::vector<data::SceneRecord>& train,
                                         const std::vector<data::SceneRecord>& val, const data::DatasetConfig& dcfg,
                                         const TrainConfig& cfg);

// Full pipeline: data, selector, captioner, fine-tuning, evaluation.
struct PipelineConfig {
  data::DatasetConfig data = data::default_dataset_config();
  selector::SelectorConfig selector;
  captioner::CaptionerConfig captioner;
  TrainConfig train;
  std::vector<ConstraintMode> eval_modes = all_modes();
  bool evaluate_pretrained = false;

  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
// Missing keys keep their defaults; the seed fans out to every phase.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

struct PipelineResult {
  nlohmann::json report;
  std::map<std::string, std::string> checkpoints;  // name -> serialized bytes
};

PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream* log = nullptr);

}  // namespace nocap::train
