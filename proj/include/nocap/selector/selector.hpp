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

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "nocap/data/scene.hpp"
#include "nocap/numerics/layers.hpp"
#include "nocap/text.hpp"

namespace nocap::selector {

// (x_c/W, y_c/H, w/W, h/H, w*h/(W*H), score)
using RegionFeature = std::array<double, 6>;
inline constexpr std::size_t kFeatureDim = 6;

RegionFeature extract_features(const data::Detection& d, int W, int H);

// Desk-scale defaults.
struct SelectorConfig {
  std::size_t embed_dim = 32;
  std::size_t num_layers = 2;
  std::size_t num_heads = 2;
  std::size_t ffn_dim = 64;
  double lambda0 = 0.2;
  double lambda1 = 0.8;
  double threshold = 0.5;
  std::size_t max_proposals = 10;
  std::size_t max_constraints = 5;
  std::vector<std::string> excluded_classes = {"person", "background"};

  void validate() const;
};

struct SelectorLayer {
  num::LayerNorm inner_norm;
  num::MultiHeadAttention inner;
  num::LayerNorm self_norm;
  num::MultiHeadAttention self;
  num::LayerNorm ffn_norm;
  num::FeedForward ffn;
};

struct SelectorParams {
  num::Linear input;
  std::vector<SelectorLayer> layers;
  num::LayerNorm final_norm;
  num::Linear head;  // W_o, b_o

  SelectorParams() = default;
  SelectorParams(const SelectorConfig& cfg, Rng& rng);
  num::NamedParams named();
};

// Attention restricted to regions of the same class. Output row i stays
// aligned with input row i.
num::Var inner_attention(num::Var x, const std::vector<int>& classes, const num::MultiHeadAttention& attn);
num::AttentionMask same_class_mask(const std::vector<int>& classes);
// Full attention across all regions.
num::Var self_attention(num::Var x, const num::MultiHeadAttention& attn);

// Feature matrix [n x 6] for the given regions.
num::Tensor feature_matrix(const std::vector<RegionFeature>& regions);

// Per-region scores Y_i as an [n x 1] tape value.
num::Var selector_forward(num::Tape& tape, const std::vector<RegionFeature>& regions, const std::vector<int>& classes,
                          const SelectorConfig& cfg, const SelectorParams& params);
std::vector<double> selector_scores(const std::vector<RegionFeature>& regions, const std::vector<int>& classes,
                                    const SelectorConfig& cfg, const SelectorParams& params);

num::Var weighted_bce(num::Var scores, const std::vector<double>& targets, double lambda0, double lambda1);

// target_i = 1 iff region i's class word (or a listed form) is a token of
// some reference caption.
std::vector<double> build_ground_truth(const data::SceneRecord& scene, const SynonymTable& synonyms);
std::vector<double> build_ground_truth(const data::SceneRecord& scene, const std::vector<std::size_t>& regions,
                                       const SynonymTable& synonyms);

// Regions eligible for selection: excluded classes dropped, then the
// max_proposals most confident (ties by original index).
std::vector<std::size_t> top_proposals(const data::SceneRecord& scene, const SelectorConfig& cfg);

// Class words with score >= threshold, one per word, ordered by the word's
// best score (descending, ties by word), truncated to max_constraints.
std::vector<std::string> select_constraints(const std::vector<double>& scores,
                                            const std::vector<data::Detection>& detections,
                                            const SelectorConfig& cfg);

// Bundles config and parameters for inference on a scene.
class RegionSelector {
 public:
  RegionSelector(SelectorConfig cfg, std::uint64_t seed);

  const SelectorConfig& config() const { return cfg_; }
  SelectorParams& params() { return params_; }
  const SelectorParams& params() const { return params_; }
  num::NamedParams named() { return params_.named(); }

  // Scores for top_proposals(scene), aligned with the returned indices.
  std::vector<double> score_scene(const data::SceneRecord& scene, std::vector<std::size_t>* regions = nullptr) const;
  std::vector<std::string> select(const data::SceneRecord& scene) const;

 private:
  SelectorConfig cfg_;
  SelectorParams params_;
};

std::vector<RegionFeature> scene_features(const data::SceneRecord& scene, const std::vector<std::size_t>& regions);
std::vector<int> scene_classes(const data::SceneRecord& scene, const std::vector<std::size_t>& regions);

}  // namespace nocap::selector
