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

#include "nocap/data/generator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "nocap/error.hpp"

namespace nocap::data {

namespace {

const std::vector<std::string> kVerbs = {"sits", "stands", "is"};
const std::vector<std::string> kPluralVerbs = {"sit", "stand", "are"};
const std::vector<std::string> kPreps = {"near", "beside", "behind"};
const std::vector<std::string> kAdjectives = {"small", "large", "red", "white", "brown"};
const std::vector<std::string> kFillers = {"field", "street", "room", "road", "beach"};
const std::vector<std::string> kGlue = {"a", "the", "and", "two", "three"};
constexpr std::size_t kMaxMentions = 3;

std::string plural(const std::string& w) {
  if (w == "sheep") return w;
  if (w.ends_with("s") || w.ends_with("ch") || w.ends_with("sh")) return w + "es";
  return w + "s";
}

}  // namespace

DatasetConfig default_dataset_config() {
  DatasetConfig c;
  c.classes = {"dog",    "cat",   "horse",   "sheep",     "cow",     "elephant", "bear",     "giraffe",
               "car",    "truck", "train",   "bicycle",   "airplane", "boat",    "bench",    "chair",
               "bed",    "laptop", "umbrella", "kite",    "clock",   "vase",     "bottle",   "bus",
               "couch",  "microwave", "pizza", "racket",   "suitcase", "zebra"};
  c.heldout = {"bottle", "bus", "couch", "microwave", "pizza", "racket", "suitcase", "zebra"};
  for (const auto& w : c.classes) {
    if (plural(w) != w) c.synonyms[w].push_back(plural(w));
  }
  c.synonyms["couch"].insert(c.synonyms["couch"].end(), {"sofa", "sofas"});
  c.synonyms["bicycle"].insert(c.synonyms["bicycle"].end(), {"bike", "bikes"});
  c.synonyms["airplane"].insert(c.synonyms["airplane"].end(), {"plane", "planes"});
  return c;
}

void DatasetConfig::validate() const {
  if (classes.size() < 2) throw ConfigError("dataset needs at least two classes");
  std::set<std::string> seen;
  for (const auto& w : classes) {
    if (w.empty() || w.find_first_of(" \t\n") != std::string::npos) {
      throw ConfigError("class word must be a single token: '" + w + "'");
    }
    if (!seen.insert(w).second) throw ConfigError("duplicate class word: " + w);
  }
  for (const auto& w : heldout) {
    if (!seen.count(w)) throw ConfigError("held-out class not in the class vocabulary: " + w);
  }
  if (num_references < kMinReferences) throw ConfigError("need at least two references per scene");
  if (!(min_area > 0.0) || !(max_area <= 1.0) || !(min_area < max_area)) throw ConfigError("bad area range");
  if (salience_tau <= 0.0 || mention_dropout < 0.0 || mention_dropout > 1.0) {
    throw ConfigError("bad salience parameters");
  }
}

void to_json(nlohmann::json& j, const DatasetConfig& c) {
  j = {{"num_train", c.num_train},
       {"num_eval", c.num_eval},
       {"classes", c.classes},
       {"heldout", c.heldout},
       {"synonyms", c.synonyms},
       {"salience_tau", c.salience_tau},
       {"mention_dropout", c.mention_dropout},
       {"num_references", c.num_references},
       {"min_area", c.min_area},
       {"max_area", c.max_area},
       {"score_noise", c.score_noise},
       {"class_embed_dim", c.class_embed_dim},
       {"visual_noise", c.visual_noise},
       {"selector_sees_heldout", c.selector_sees_heldout},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, DatasetConfig& c) {
  c = default_dataset_config();
  c.num_train = j.value("num_train", c.num_train);
  c.num_eval = j.value("num_eval", c.num_eval);
  c.classes = j.value("classes", c.classes);
  c.heldout = j.value("heldout", c.heldout);
  c.synonyms = j.value("synonyms", c.synonyms);
  c.salience_tau = j.value("salience_tau", c.salience_tau);
  c.mention_dropout = j.value("mention_dropout", c.mention_dropout);
  c.num_references = j.value("num_references", c.num_references);
  c.min_area = j.value("min_area", c.min_area);
  c.max_area = j.value("max_area", c.max_area);
  c.score_noise = j.value("score_noise", c.score_noise);
  c.class_embed_dim = j.value("class_embed_dim", c.class_embed_dim);
  c.visual_noise = j.value("visual_noise", c.visual_noise);
  c.selector_sees_heldout = j.value("selector_sees_heldout", c.selector_sees_heldout);
  c.seed = j.value("seed", c.seed);
}

Vocabulary build_vocabulary(const DatasetConfig& cfg) {
  std::vector<std::string> words = kGlue;
  for (const auto* list : {&kVerbs, &kPluralVerbs, &kPreps, &kAdjectives, &kFillers}) {
    words.insert(words.end(), list->begin(), list->end());
  }
  for (const auto& w : cfg.classes) {
    words.push_back(w);
    words.push_back(plural(w));
    const auto it = cfg.synonyms.find(w);
    if (it != cfg.synonyms.end()) words.insert(words.end(), it->second.begin(), it->second.end());
  }
  return Vocabulary(words);
}

std::vector<std::vector<double>> class_embeddings(const DatasetConfig& cfg) {
  Rng rng(cfg.seed ^ 0xC1A55E5ULL);
  std::vector<std::vector<double>> out(cfg.classes.size(), std::vector<double>(cfg.class_embed_dim));
  for (auto& v : out) {
    for (double& x : v) x = rng.normal();
  }
  return out;
}

std::vector<std::size_t> salient_regions(const SceneRecord& scene, double tau) {
  const double img = static_cast<double>(scene.W) * static_cast<double>(scene.H);
  std::vector<std::size_t> order(scene.detections.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto area = [&](std::size_t i) { return scene.detections[i].box.w * scene.detections[i].box.h / img; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return area(a) > area(b); });
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (r < 2 || area(order[r]) >= tau) out.push_back(order[r]);
  }
  return out;
}

std::vector<Tokens> gen_captions(const SceneRecord& scene, Rng& rng, const DatasetConfig& cfg) {
  if (scene.detections.empty()) throw ContractError("gen_captions: scene has no detections");
  // Distinct salient classes, largest first, with their detection counts.
  std::vector<std::pair<std::string, std::size_t>> mentions;
  for (std::size_t i : salient_regions(scene, cfg.salience_tau)) {
    const auto& w = scene.detections[i].class_word;
    auto it = std::find_if(mentions.begin(), mentions.end(), [&](const auto& m) { return m.first == w; });
    if (it == mentions.end()) mentions.emplace_back(w, 0);
  }
  if (mentions.size() > kMaxMentions) mentions.resize(kMaxMentions);
  for (auto& [w, count] : mentions) {
    for (const auto& d : scene.detections) count += d.class_word == w ? 1 : 0;
  }

  std::vector<Tokens> refs;
  for (std::size_t r = 0; r < cfg.num_references; ++r) {
    auto m = mentions;
    // The largest object is never dropped.
    if (m.size() >= 2 && rng.bernoulli(cfg.mention_dropout)) {
      m.erase(m.begin() + 1 + static_cast<std::ptrdiff_t>(rng.index(m.size() - 1)));
    }
    auto phrase = [&](const std::pair<std::string, std::size_t>& x, Tokens& out) {
      if (x.second == 1) {
        out.push_back("a");
        if (rng.bernoulli(0.3)) out.push_back(kAdjectives[rng.index(kAdjectives.size())]);
        out.push_back(x.first);
      } else {
        out.push_back(x.second == 2 ? "two" : "three");
        out.push_back(plural(x.first));
      }
    };
    Tokens cap;
    phrase(m[0], cap);
    const std::size_t verb = rng.index(kVerbs.size());
    cap.push_back(m[0].second == 1 ? kVerbs[verb] : kPluralVerbs[verb]);
    cap.push_back(kPreps[rng.index(kPreps.size())]);
    if (m.size() == 1) {
      cap.push_back("the");
      cap.push_back(kFillers[rng.index(kFillers.size())]);
    } else {
      for (std::size_t i = 1; i < m.size(); ++i) {
        if (i > 1) cap.push_back("and");
        phrase(m[i], cap);
      }
    }
    refs.push_back(std::move(cap));
  }
  return refs;
}

SceneRecord gen_scene(Rng& rng, const DatasetConfig& cfg, std::uint64_t scene_id, Split split,
                      const std::vector<std::vector<double>>& class_embed) {
  SceneRecord s;
  s.scene_id = scene_id;
  s.split = split;
  s.W = 320 + static_cast<int>(rng.index(321));
  s.H = 320 + static_cast<int>(rng.index(321));
  const double W = s.W, H = s.H, img = W * H;
  const std::size_t n = kMinDetections + rng.index(kMaxDetections - kMinDetections + 1);
  std::vector<std::size_t> cls;
  for (std::size_t i = 0; i < n; ++i) {
    if (!cls.empty() && rng.bernoulli(0.2)) {
      cls.push_back(cls[rng.index(cls.size())]);
    } else {
      cls.push_back(rng.index(cfg.classes.size()));
    }
  }
  const double lo = std::log(cfg.min_area), hi = std::log(cfg.max_area);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::exp(rng.uniform(lo, hi));
    const double ar = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
    double w = std::sqrt(a * img * ar), h = a * img / w;
    if (w > W) {
      w = W;
      h = a * img / w;
    }
    if (h > H) {
      h = H;
      w = a * img / h;
    }
    Box b{rng.uniform(w / 2, W - w / 2), rng.uniform(h / 2, H - h / 2), w, h};
    const double sig = 1.0 / (1.0 + std::exp(-std::log(a / 0.05)));
    const double score = std::clamp(0.3 + 0.65 * sig + cfg.score_noise * rng.normal(), 0.05, 0.99);
    s.detections.push_back({static_cast<int>(cls[i]), cfg.classes[cls[i]], b, score});

    std::vector<double> v = class_embed.at(cls[i]);
    for (double& x : v) x += cfg.visual_noise * rng.normal();
    v.insert(v.end(), {b.x_c / W, b.y_c / H, b.w / W, b.h / H, b.w * b.h / img, score});
    s.region_visual.push_back(std::move(v));
  }
  s.references = gen_captions(s, rng, cfg);
  return s;
}

std::vector<SceneRecord> gen_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  const auto embed = class_embeddings(cfg);
  std::vector<SceneRecord> out;
  const std::size_t total = cfg.num_train + cfg.num_eval;
  for (std::size_t i = 0; i < total; ++i) {
    Rng rng = Rng(cfg.seed).fork(i);
    const Split split = i < cfg.num_train ? Split::kTrain : ((i - cfg.num_train) % 2 == 0 ? Split::kVal : Split::kTest);
    out.push_back(gen_scene(rng, cfg, i, split, embed));
  }
  return out;
}

bool mentions_any(const SceneRecord& scene, const std::vector<std::string>& words, const SynonymTable& syn) {
  for (const auto& ref : scene.references) {
    for (const auto& w : words) {
      if (syn.mentioned_in(ref, w)) return true;
    }
  }
  return false;
}

bool is_out_domain(const SceneRecord& scene, const DatasetConfig& cfg) {
  return mentions_any(scene, cfg.heldout, cfg.synonym_table());
}

HeldOutSplits apply_heldout(const std::vector<SceneRecord>& dataset, const DatasetConfig& cfg) {
  cfg.validate();
  const auto syn = cfg.synonym_table();
  HeldOutSplits out;
  for (const auto& s : dataset) {
    switch (s.split) {
      case Split::kTrain: {
        const bool excluded = mentions_any(s, cfg.heldout, syn);
        if (!excluded) out.captioner_train.push_back(s);
        if (!excluded || cfg.selector_sees_heldout) out.selector_train.push_back(s);
        break;
      }
      case Split::kVal:
        out.val.push_back(s);
        break;
      case Split::kTest:
        out.test.push_back(s);
        break;
    }
  }
  return out;
}

}  // namespace nocap::data
