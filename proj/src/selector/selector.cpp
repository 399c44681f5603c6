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

#include "nocap/selector/selector.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "nocap/error.hpp"

namespace nocap::selector {

RegionFeature extract_features(const data::Detection& d, int W, int H) {
  if (W <= 0 || H <= 0) throw ContractError("extract_features: image dimensions must be positive");
  data::validate_detection(d, W, H);
  const double Wd = W, Hd = H;
  const double fw = d.box.w / Wd;
  const double fh = d.box.h / Hd;
  return {d.box.x_c / Wd, d.box.y_c / Hd, fw, fh, fw * fh, d.score};
}

void SelectorConfig::validate() const {
  if (embed_dim == 0 || num_layers == 0 || num_heads == 0 || ffn_dim == 0) {
    throw ConfigError("selector dimensions must be positive");
  }
  if (embed_dim % num_heads != 0) throw ConfigError("selector embed_dim must be divisible by num_heads");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("selector threshold must lie in (0,1)");
  if (max_proposals == 0) throw ConfigError("max_proposals must be positive");
}

SelectorParams::SelectorParams(const SelectorConfig& cfg, Rng& rng)
    : input(kFeatureDim, cfg.embed_dim, rng), final_norm(cfg.embed_dim), head(cfg.embed_dim, 1, rng) {
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    layers.push_back({num::LayerNorm(cfg.embed_dim), num::MultiHeadAttention(cfg.embed_dim, cfg.num_heads, rng),
                      num::LayerNorm(cfg.embed_dim), num::MultiHeadAttention(cfg.embed_dim, cfg.num_heads, rng),
                      num::LayerNorm(cfg.embed_dim), num::FeedForward(cfg.embed_dim, cfg.ffn_dim, rng)});
  }
}

num::NamedParams SelectorParams::named() {
  num::NamedParams out;
  input.collect("selector.input", out);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "selector.layer" + std::to_string(l);
    auto& L = layers[l];
    L.inner_norm.collect(p + ".inner_norm", out);
    L.inner.collect(p + ".inner", out);
    L.self_norm.collect(p + ".self_norm", out);
    L.self.collect(p + ".self", out);
    L.ffn_norm.collect(p + ".ffn_norm", out);
    L.ffn.collect(p + ".ffn", out);
  }
  final_norm.collect("selector.final_norm", out);
  head.collect("selector.head", out);
  return out;
}

num::AttentionMask same_class_mask(const std::vector<int>& classes) {
  const std::size_t n = classes.size();
  num::AttentionMask mask = num::AttentionMask::full(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) mask.set(i, j, classes[i] == classes[j]);
  }
  return mask;
}

num::Var inner_attention(num::Var x, const std::vector<int>& classes, const num::MultiHeadAttention& attn) {
  if (x.rows() != classes.size()) throw DimensionError("inner_attention: one class id per region required");
  const num::AttentionMask mask = same_class_mask(classes);
  return attn(x, x, &mask);
}

num::Var self_attention(num::Var x, const num::MultiHeadAttention& attn) { return attn(x, x); }

num::Tensor feature_matrix(const std::vector<RegionFeature>& regions) {
  num::Tensor t(num::Shape{regions.size(), kFeatureDim});
  for (std::size_t i = 0; i < regions.size(); ++i) {
    for (std::size_t j = 0; j < kFeatureDim; ++j) t.at(i, j) = regions[i][j];
  }
  return t;
}

num::Var selector_forward(num::Tape& tape, const std::vector<RegionFeature>& regions, const std::vector<int>& classes,
                          const SelectorConfig& cfg, const SelectorParams& params) {
  if (regions.empty()) throw ContractError("selector_forward: no regions");
  if (regions.size() > cfg.max_proposals) throw ContractError("selector_forward: more regions than max_proposals");
  if (classes.size() != regions.size()) throw DimensionError("selector_forward: one class id per region required");
  num::Var x = params.input(tape.constant(feature_matrix(regions)));
  for (const auto& L : params.layers) {
    x = num::add(x, inner_attention(L.inner_norm(x), classes, L.inner));
    x = num::add(x, self_attention(L.self_norm(x), L.self));
    x = num::add(x, L.ffn(L.ffn_norm(x)));
  }
  return num::sigmoid(params.head(params.final_norm(x)));
}

std::vector<double> selector_scores(const std::vector<RegionFeature>& regions, const std::vector<int>& classes,
                                    const SelectorConfig& cfg, const SelectorParams& params) {
  num::Tape tape;
  const auto& v = selector_forward(tape, regions, classes, cfg, params).value();
  return {v.data().begin(), v.data().end()};
}

num::Var weighted_bce(num::Var scores, const std::vector<double>& targets, double lambda0, double lambda1) {
  return num::weighted_bce(scores, targets, lambda0, lambda1);
}

std::vector<double> build_ground_truth(const data::SceneRecord& scene, const std::vector<std::size_t>& regions,
                                       const SynonymTable& synonyms) {
  if (scene.references.empty()) throw ContractError("build_ground_truth: scene has no reference caption");
  std::vector<double> out;
  out.reserve(regions.size());
  for (std::size_t r : regions) {
    const std::string& word = scene.detections.at(r).class_word;
    const bool hit = std::any_of(scene.references.begin(), scene.references.end(),
                                 [&](const Tokens& ref) { return synonyms.mentioned_in(ref, word); });
    out.push_back(hit ? 1.0 : 0.0);
  }
  return out;
}

std::vector<double> build_ground_truth(const data::SceneRecord& scene, const SynonymTable& synonyms) {
  std::vector<std::size_t> all(scene.detections.size());
  std::iota(all.begin(), all.end(), 0);
  return build_ground_truth(scene, all, synonyms);
}

std::vector<std::size_t> top_proposals(const data::SceneRecord& scene, const SelectorConfig& cfg) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < scene.detections.size(); ++i) {
    const auto& w = scene.detections[i].class_word;
    if (std::find(cfg.excluded_classes.begin(), cfg.excluded_classes.end(), w) == cfg.excluded_classes.end()) {
      idx.push_back(i);
    }
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scene.detections[a].score > scene.detections[b].score;
  });
  if (idx.size() > cfg.max_proposals) idx.resize(cfg.max_proposals);
  return idx;
}

std::vector<std::string> select_constraints(const std::vector<double>& scores,
                                            const std::vector<data::Detection>& detections,
                                            const SelectorConfig& cfg) {
  if (scores.size() != detections.size()) throw DimensionError("select_constraints: scores/detections mismatch");
  std::map<std::string, double> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < cfg.threshold) continue;
    const auto& w = detections[i].class_word;
    if (std::find(cfg.excluded_classes.begin(), cfg.excluded_classes.end(), w) != cfg.excluded_classes.end()) {
      continue;
    }
    auto [it, inserted] = best.emplace(w, scores[i]);
    if (!inserted) it->second = std::max(it->second, scores[i]);
  }
  std::vector<std::pair<std::string, double>> ranked(best.begin(), best.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (const auto& [w, s] : ranked) {
    if (out.size() == cfg.max_constraints) break;
    out.push_back(w);
  }
  return out;
}

RegionSelector::RegionSelector(SelectorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed);
  params_ = SelectorParams(cfg_, rng);
}

std::vector<RegionFeature> scene_features(const data::SceneRecord& scene, const std::vector<std::size_t>& regions) {
  std::vector<RegionFeature> out;
  out.reserve(regions.size());
  for (std::size_t r : regions) out.push_back(extract_features(scene.detections.at(r), scene.W, scene.H));
  return out;
}

std::vector<int> scene_classes(const data::SceneRecord& scene, const std::vector<std::size_t>& regions) {
  std::vector<int> out;
  out.reserve(regions.size());
  for (std::size_t r : regions) out.push_back(scene.detections.at(r).class_id);
  return out;
}

std::vector<double> RegionSelector::score_scene(const data::SceneRecord& scene,
                                                std::vector<std::size_t>* regions) const {
  const auto idx = top_proposals(scene, cfg_);
  if (regions) *regions = idx;
  if (idx.empty()) return {};
  return selector_scores(scene_features(scene, idx), scene_classes(scene, idx), cfg_, params_);
}

std::vector<std::string> RegionSelector::select(const data::SceneRecord& scene) const {
  std::vector<std::size_t> idx;
  const auto scores = score_scene(scene, &idx);
  std::vector<data::Detection> dets;
  for (std::size_t r : idx) dets.push_back(scene.detections[r]);
  return select_constraints(scores, dets, cfg_);
}

}  // namespace nocap::selector
