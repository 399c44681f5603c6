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

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "nocap/error.hpp"
#include "nocap/numerics/checkpoint.hpp"
#include "nocap/numerics/optim.hpp"

namespace nocap::train {

ConstraintMode constraint_mode_from_string(const std::string& s) {
  for (ConstraintMode m : all_modes()) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown constraint mode: " + s);
}

std::string to_string(ConstraintMode m) {
  switch (m) {
    case ConstraintMode::kNone:
      return "none";
    case ConstraintMode::kTop1:
      return "top1";
    case ConstraintMode::kTop2:
      return "top2";
    case ConstraintMode::kTop3:
      return "top3";
    case ConstraintMode::kSelector:
      return "selector";
    case ConstraintMode::kOracle:
      return "oracle";
  }
  return "none";
}

const std::vector<ConstraintMode>& all_modes() {
  static const std::vector<ConstraintMode> modes = {ConstraintMode::kNone,  ConstraintMode::kTop1,
                                                    ConstraintMode::kTop2,  ConstraintMode::kTop3,
                                                    ConstraintMode::kSelector, ConstraintMode::kOracle};
  return modes;
}

void TrainConfig::validate() const {
  if (batch_size == 0 || warmup <= 0 || beam_size == 0) throw ConfigError("batch_size, warmup and beam_size must be positive");
  if (!(rl_lr > 0.0)) throw ConfigError("rl_lr must be positive");
  if (max_constraints == 0) throw ConfigError("max_constraints must be positive");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"batch_size", c.batch_size},
       {"warmup", c.warmup},
       {"rl_lr", c.rl_lr},
       {"selector_epochs", c.selector_epochs},
       {"captioner_epochs", c.captioner_epochs},
       {"rl_epochs", c.rl_epochs},
       {"rl_scenes_per_epoch", c.rl_scenes_per_epoch},
       {"beam_size", c.beam_size},
       {"max_constraints", c.max_constraints},
       {"score_mode", decoder::to_string(c.score_mode)},
       {"baseline", c.baseline == Baseline::kMeanBeam ? "mean-beam" : "greedy"},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.batch_size = j.value("batch_size", c.batch_size);
  c.warmup = j.value("warmup", c.warmup);
  c.rl_lr = j.value("rl_lr", c.rl_lr);
  c.selector_epochs = j.value("selector_epochs", c.selector_epochs);
  c.captioner_epochs = j.value("captioner_epochs", c.captioner_epochs);
  c.rl_epochs = j.value("rl_epochs", c.rl_epochs);
  c.rl_scenes_per_epoch = j.value("rl_scenes_per_epoch", c.rl_scenes_per_epoch);
  c.beam_size = j.value("beam_size", c.beam_size);
  c.max_constraints = j.value("max_constraints", c.max_constraints);
  if (j.contains("score_mode")) c.score_mode = decoder::score_mode_from_string(j["score_mode"]);
  if (j.contains("baseline")) {
    const std::string b = j["baseline"];
    if (b == "mean-beam") {
      c.baseline = Baseline::kMeanBeam;
    } else if (b == "greedy") {
      c.baseline = Baseline::kGreedy;
    } else {
      throw ConfigError("unknown baseline: " + b);
    }
  }
  c.seed = j.value("seed", c.seed);
}

nlohmann::json to_json(const std::vector<EpochLog>& logs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& l : logs) out.push_back({{"epoch", l.epoch}, {"train_loss", l.train_loss}, {"val", l.val}});
  return out;
}

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

void check_loss(double loss, const std::string& phase, std::size_t epoch, std::size_t step) {
  if (!std::isfinite(loss)) {
    throw DivergenceError(phase + ": non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                          std::to_string(step));
  }
}

void check_grads(const std::vector<num::Tensor*>& params, const std::string& phase) {
  for (const auto* p : params) {
    for (double g : p->grad()) {
      if (!std::isfinite(g)) throw DivergenceError(phase + ": non-finite gradient");
    }
  }
}

}  // namespace

std::vector<std::string> reference_constraints(const data::SceneRecord& scene, const SynonymTable& syn,
                                               std::size_t cap) {
  std::vector<std::string> out;
  for (const auto& d : scene.detections) {
    if (out.size() == cap) break;
    if (std::find(out.begin(), out.end(), d.class_word) != out.end()) continue;
    const bool mentioned = std::any_of(scene.references.begin(), scene.references.end(),
                                       [&](const Tokens& r) { return syn.mentioned_in(r, d.class_word); });
    if (mentioned) out.push_back(d.class_word);
  }
  return out;
}

std::vector<std::string> top_k_constraints(const data::SceneRecord& scene, const selector::SelectorConfig& cfg,
                                           std::size_t k) {
  std::vector<std::string> out;
  const auto idx = selector::top_proposals(scene, cfg);
  for (std::size_t i = 0; i < std::min(k, idx.size()); ++i) {
    const auto& w = scene.detections[idx[i]].class_word;
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  }
  return out;
}

double selection_f1(const std::vector<std::vector<std::string>>& selected,
                    const std::vector<std::vector<std::string>>& truth) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const std::set<std::string> s(selected[i].begin(), selected[i].end()), t(truth.at(i).begin(), truth.at(i).end());
    for (const auto& w : s) (t.count(w) ? tp : fp) += 1;
    for (const auto& w : t) fn += s.count(w) ? 0 : 1;
  }
  return metrics::F1Counts{tp, fp, fn}.f1();
}

// ---------------------------------------------------------------------------
// Selector

std::vector<EpochLog> train_selector(selector::RegionSelector& model, const std::vector<data::SceneRecord>& train,
                                     const std::vector<data::SceneRecord>& val, const SynonymTable& syn,
                                     const TrainConfig& cfg) {
  cfg.validate();
  const auto& scfg = model.config();
  struct Item {
    std::vector<selector::RegionFeature> features;
    std::vector<int> classes;
    std::vector<double> targets;
  };
  std::vector<Item> items;
  for (const auto& s : train) {
    const auto idx = selector::top_proposals(s, scfg);
    if (idx.empty()) continue;
    items.push_back({selector::scene_features(s, idx), selector::scene_classes(s, idx),
                     selector::build_ground_truth(s, idx, syn)});
  }
  const auto named = model.named();
  num::enable_grads(named);
  const auto params = num::tensors_of(named);
  num::AdamState adam;
  const num::NoamSchedule sched{static_cast<int>(scfg.embed_dim), cfg.warmup};
  Rng rng = Rng(cfg.seed).fork(0x5E1EC7);

  std::vector<std::vector<std::string>> val_truth;
  for (const auto& s : val) val_truth.push_back(reference_constraints(s, syn, scfg.max_constraints * 4));

  std::vector<EpochLog> logs;
  double best = -1.0;
  std::string best_params;
  for (std::size_t epoch = 1; epoch <= cfg.selector_epochs; ++epoch) {
    auto order = iota(items.size());
    shuffle(order, rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      num::zero_grads(named);
      for (std::size_t b = start; b < end; ++b) {
        const Item& it = items[order[b]];
        num::Tape tape;
        auto y = selector::selector_forward(tape, it.features, it.classes, scfg, model.params());
        auto loss = num::scale(selector::weighted_bce(y, it.targets, scfg.lambda0, scfg.lambda1),
                               1.0 / static_cast<double>(end - start));
        tape.backward(loss);
        total += loss.value().item() * static_cast<double>(end - start);
      }
      check_loss(total, "selector", epoch, adam.step);
      check_grads(params, "selector");
      num::adam_step(params, adam, num::noam_lr(adam.step + 1, sched));
    }
    EpochLog log{epoch, items.empty() ? 0.0 : total / static_cast<double>(items.size()), {}};
    if (!val.empty()) {
      std::vector<std::vector<std::string>> selected, top2;
      for (const auto& s : val) {
        selected.push_back(model.select(s));
        top2.push_back(top_k_constraints(s, scfg, 2));
      }
      log.val["selection_f1"] = selection_f1(selected, val_truth);
      log.val["top2_f1"] = selection_f1(top2, val_truth);
      if (log.val["selection_f1"] > best) {
        best = log.val["selection_f1"];
        best_params = num::serialize_checkpoint(named);
      }
    }
    logs.push_back(std::move(log));
  }
  if (!best_params.empty()) num::restore_checkpoint(num::deserialize_checkpoint(best_params), named);
  return logs;
}

// ---------------------------------------------------------------------------
// Captioner pre-training

namespace {

struct CaptionItem {
  num::Tensor regions;
  std::vector<std::vector<TokenId>> captions;
};

std::vector<CaptionItem> caption_items(const captioner::Captioner& model, const std::vector<data::SceneRecord>& scenes) {
  std::vector<CaptionItem> out;
  for (const auto& s : scenes) {
    CaptionItem it{captioner::region_matrix(s.region_visual), {}};
    for (const auto& r : s.references) {
      auto ids = captioner::caption_ids(model.vocab(), r);
      if (ids.size() > model.config().max_len + 1) {
        throw ValidationError("reference longer than the captioner's max_len: " + join(r));
      }
      it.captions.push_back(std::move(ids));
    }
    out.push_back(std::move(it));
  }
  return out;
}

}  // namespace

double mean_token_nll(const captioner::Captioner& model, const std::vector<data::SceneRecord>& scenes) {
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const auto& it : caption_items(model, scenes)) {
    num::Tape tape;
    auto enc = captioner::encode(tape, it.regions, model.config(), model.params());
    for (const auto& ids : it.captions) {
      const double n = static_cast<double>(ids.size() - 1);
      nll += captioner::xent_loss(ids, enc, model.config(), model.params()).value().item() * n;
      tokens += ids.size() - 1;
    }
  }
  return tokens ? nll / static_cast<double>(tokens) : 0.0;
}

std::vector<EpochLog> pretrain_captioner(captioner::Captioner& model, const std::vector<data::SceneRecord>& train,
                                         const std::vector<data::SceneRecord>& val, const TrainConfig& cfg) {
  cfg.validate();
  const auto items = caption_items(model, train);
  const auto named = model.named();
  num::enable_grads(named);
  const auto params = num::tensors_of(named);
  num::AdamState adam;
  const num::NoamSchedule sched{static_cast<int>(model.config().d_model), cfg.warmup};
  Rng rng = Rng(cfg.seed).fork(0xCA971);
  std::vector<EpochLog> logs;
  for (std::size_t epoch = 1; epoch <= cfg.captioner_epochs; ++epoch) {
    auto order = iota(items.size());
    shuffle(order, rng);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::size_t batch_captions = 0;
      for (std::size_t b = start; b < end; ++b) batch_captions += items[order[b]].captions.size();
      num::zero_grads(named);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const auto& it = items[order[b]];
        num::Tape tape;
        auto enc = captioner::encode(tape, it.regions, model.config(), model.params());
        std::vector<num::Var> losses;
        for (const auto& ids : it.captions) losses.push_back(captioner::xent_loss(ids, enc, model.config(), model.params()));
        auto loss = num::scale(num::add_n(losses), 1.0 / static_cast<double>(batch_captions));
        tape.backward(loss);
        batch_loss += loss.value().item();
      }
      check_loss(batch_loss, "captioner", epoch, adam.step);
      check_grads(params, "captioner");
      num::adam_step(params, adam, num::noam_lr(adam.step + 1, sched));
      total += batch_loss * static_cast<double>(batch_captions);
      count += batch_captions;
    }
    EpochLog log{epoch, count ? total / static_cast<double>(count) : 0.0, {}};
    if (!val.empty()) {
      const double nll = mean_token_nll(model, val);
      log.val["token_nll"] = nll;
      log.val["perplexity"] = std::exp(nll);
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

// ---------------------------------------------------------------------------
// Decoding and evaluation

std::vector<std::string> constraints_for(ConstraintMode mode, const data::SceneRecord& scene,
                                         const selector::RegionSelector* selector, const SynonymTable& syn,
                                         std::size_t cap) {
  const selector::SelectorConfig default_cfg;
  const auto& scfg = selector ? selector->config() : default_cfg;
  std::vector<std::string> words;
  switch (mode) {
    case ConstraintMode::kNone:
      break;
    case ConstraintMode::kTop1:
      words = top_k_constraints(scene, scfg, 1);
      break;
    case ConstraintMode::kTop2:
      words = top_k_constraints(scene, scfg, 2);
      break;
    case ConstraintMode::kTop3:
      words = top_k_constraints(scene, scfg, 3);
      break;
    case ConstraintMode::kSelector:
      if (!selector) throw ContractError("selector mode needs a trained selector");
      words = selector->select(scene);
      break;
    case ConstraintMode::kOracle:
      words = reference_constraints(scene, syn, cap);
      break;
  }
  if (words.size() > cap) words.resize(cap);
  return words;
}

namespace {

decoder::SearchOptions search_options(const captioner::Captioner& model, const TrainConfig& cfg, std::size_t beam) {
  decoder::SearchOptions opts;
  opts.beam_size = beam;
  opts.max_tokens = model.config().max_len - 1;
  opts.score_mode = cfg.score_mode;
  return opts;
}

bool contains_all(const Tokens& caption, const std::vector<std::string>& words) {
  return std::all_of(words.begin(), words.end(),
                     [&](const std::string& w) { return std::find(caption.begin(), caption.end(), w) != caption.end(); });
}

}  // namespace

EvalRun decode_eval(const captioner::Captioner& model, const selector::RegionSelector* selector,
                    const std::vector<data::SceneRecord>& scenes, ConstraintMode mode, const data::DatasetConfig& dcfg,
                    const TrainConfig& cfg, std::ostream* trace) {
  const auto syn = dcfg.synonym_table();
  EvalRun run;
  run.mode = mode;
  std::vector<metrics::EvalRecord> records;
  for (const auto& s : scenes) {
    DecodedScene d;
    d.scene_id = s.scene_id;
    d.constraints = constraints_for(mode, s, selector, syn, cfg.max_constraints);
    const decoder::ConstraintSet cs(d.constraints, model.vocab(), cfg.max_constraints);
    const auto lm = model.language_model(captioner::region_matrix(s.region_visual));
    auto opts = search_options(model, cfg, cfg.beam_size);
    std::ostringstream cells;
    if (trace) {
      opts.trace = &cells;
      opts.token_name = [&](TokenId id) { return model.vocab().token(id); };
    }
    const auto res = decoder::grid_beam_search(lm, cs, opts);
    if (trace) {
      std::istringstream lines(cells.str());
      std::string line;
      while (std::getline(lines, line)) {
        auto j = nlohmann::json::parse(line);
        j["scene_id"] = s.scene_id;
        *trace << j.dump() << '\n';
      }
    }
    d.caption = model.vocab().decode(res.best.tokens);
    d.finished = res.finished;
    d.satisfied = contains_all(d.caption, d.constraints);
    if (!d.constraints.empty()) {
      ++run.constrained;
      run.satisfied += d.satisfied ? 1 : 0;
    }
    metrics::EvalRecord r;
    r.scene_id = s.scene_id;
    r.generated = d.caption;
    r.references = s.references;
    for (const auto& det : s.detections) r.classes.push_back(det.class_word);
    records.push_back(std::move(r));
    run.decoded.push_back(std::move(d));
  }
  run.report = metrics::evaluate(records, dcfg.heldout, syn);
  return run;
}

nlohmann::json to_json(const EvalRun& run, bool with_captions) {
  nlohmann::json j = metrics::to_json(run.report);
  j["mode"] = to_string(run.mode);
  j["constrained_scenes"] = run.constrained;
  j["satisfied_scenes"] = run.satisfied;
  std::size_t finished = 0;
  for (const auto& d : run.decoded) finished += d.finished ? 1 : 0;
  j["finished_scenes"] = finished;
  if (with_captions) {
    nlohmann::json caps = nlohmann::json::array();
    for (const auto& d : run.decoded) {
      caps.push_back({{"scene_id", d.scene_id}, {"constraints", d.constraints}, {"caption", join(d.caption)},
                      {"finished", d.finished}});
    }
    j["captions"] = caps;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Self-critical fine-tuning through GBS

ScstStats scst_accumulate(const captioner::Captioner& model, const data::SceneRecord& scene,
                          const decoder::ConstraintSet& constraints, const metrics::IdfTable& idf,
                          const TrainConfig& cfg, double weight) {
  const auto regions = captioner::region_matrix(scene.region_visual);
  const auto lm = model.language_model(regions);
  const auto res = decoder::grid_beam_search(lm, constraints, search_options(model, cfg, cfg.beam_size));
  ScstStats stats;
  if (res.finalists.empty()) return stats;
  std::vector<double> rewards;
  for (const auto& h : res.finalists) rewards.push_back(metrics::cider_d(model.vocab().decode(h.tokens), scene.references, idf));
  double baseline = 0.0;
  if (cfg.baseline == Baseline::kMeanBeam) {
    for (double r : rewards) baseline += r;
    baseline /= static_cast<double>(rewards.size());
  } else {
    const auto greedy = decoder::grid_beam_search(lm, constraints, search_options(model, cfg, 1));
    baseline = metrics::cider_d(model.vocab().decode(greedy.best.tokens), scene.references, idf);
  }
  stats.samples = rewards.size();
  stats.mean_baseline = baseline;
  for (double r : rewards) stats.mean_reward += r / static_cast<double>(rewards.size());

  num::Tape tape;
  captioner::CaptionerScorer scorer(model, captioner::encode(tape, regions, model.config(), model.params()));
  std::vector<num::Var> terms;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    const double adv = rewards[i] - baseline;
    if (adv == 0.0) continue;
    const auto& h = res.finalists[i];
    terms.push_back(num::scale(decoder::dgbs_sequence_logprob(tape, h.tokens, h.forced_positions, scorer), -adv * weight));
  }
  if (terms.empty()) return stats;
  tape.backward(num::add_n(terms));
  return stats;
}

namespace {

double validation_cider(const captioner::Captioner& model, const std::vector<data::SceneRecord>& val,
                        const data::DatasetConfig& dcfg, const TrainConfig& cfg) {
  return decode_eval(model, nullptr, val, ConstraintMode::kOracle, dcfg, cfg).report.overall.cider_d;
}

}  // namespace

std::vector<EpochLog> finetune_scst_dgbs(captioner::Captioner& model, const std::vector<data::SceneRecord>& train,
                                         const std::vector<data::SceneRecord>& val, const data::DatasetConfig& dcfg,
                                         const TrainConfig& cfg) {
  cfg.validate();
  const auto syn = dcfg.synonym_table();
  std::vector<std::vector<Tokens>> ref_sets;
  for (const auto& s : train) ref_sets.push_back(s.references);
  const metrics::IdfTable idf(ref_sets);
  const auto named = model.named();
  num::enable_grads(named);
  const auto params = num::tensors_of(named);
  num::AdamState adam;
  Rng rng = Rng(cfg.seed).fork(0x5C57);

  std::vector<EpochLog> logs;
  double best = val.empty() ? 0.0 : validation_cider(model, val, dcfg, cfg);
  std::string best_params = num::serialize_checkpoint(named);
  logs.push_back({0, 0.0, {{"cider_d", best}}});
  for (std::size_t epoch = 1; epoch <= cfg.rl_epochs; ++epoch) {
    auto order = iota(train.size());
    shuffle(order, rng);
    if (cfg.rl_scenes_per_epoch && order.size() > cfg.rl_scenes_per_epoch) order.resize(cfg.rl_scenes_per_epoch);
    double reward = 0.0;
    std::size_t scenes = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      num::zero_grads(named);
      for (std::size_t b = start; b < end; ++b) {
        const auto& s = train[order[b]];
        const decoder::ConstraintSet cs(reference_constraints(s, syn, cfg.max_constraints), model.vocab(),
                                        cfg.max_constraints);
        const auto st = scst_accumulate(model, s, cs, idf, cfg, 1.0 / static_cast<double>(end - start));
        reward += st.mean_reward;
        ++scenes;
      }
      check_loss(reward, "finetune", epoch, adam.step);
      check_grads(params, "finetune");
      num::adam_step(params, adam, cfg.rl_lr);
    }
    EpochLog log{epoch, scenes ? -reward / static_cast<double>(scenes) : 0.0, {}};
    log.val["train_reward"] = scenes ? reward / static_cast<double>(scenes) : 0.0;
    if (!val.empty()) {
      const double c = validation_cider(model, val, dcfg, cfg);
      log.val["cider_d"] = c;
      if (c > best) {
        best = c;
        best_params = num::serialize_checkpoint(named);
      }
    }
    logs.push_back(std::move(log));
  }
  num::restore_checkpoint(num::deserialize_checkpoint(best_params), named);
  return logs;
}

// ---------------------------------------------------------------------------
// Pipeline

void PipelineConfig::validate() const {
  data.validate();
  selector.validate();
  captioner.validate();
  train.validate();
  if (captioner.visual_dim != data.visual_dim()) {
    throw ConfigError("captioner visual_dim must equal the dataset's region vector size " +
                      std::to_string(data.visual_dim()));
  }
  if (train.max_constraints + 1 >= captioner.max_len) throw ConfigError("max_len leaves no room for the constraints");
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  nlohmann::json modes = nlohmann::json::array();
  for (auto m : c.eval_modes) modes.push_back(to_string(m));
  nlohmann::json sel = {{"embed_dim", c.selector.embed_dim},   {"num_layers", c.selector.num_layers},
                        {"num_heads", c.selector.num_heads},   {"ffn_dim", c.selector.ffn_dim},
                        {"lambda0", c.selector.lambda0},       {"lambda1", c.selector.lambda1},
                        {"threshold", c.selector.threshold},   {"max_proposals", c.selector.max_proposals},
                        {"max_constraints", c.selector.max_constraints},
                        {"excluded_classes", c.selector.excluded_classes}};
  j = {{"data", c.data},   {"selector", sel}, {"captioner", c.captioner}, {"train", c.train}, {"eval_modes", modes},
       {"evaluate_pretrained", c.evaluate_pretrained}};
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    if (j.contains("data")) c.data = j["data"].get<data::DatasetConfig>();
    if (j.contains("selector")) {
      const auto& s = j["selector"];
      c.selector.embed_dim = s.value("embed_dim", c.selector.embed_dim);
      c.selector.num_layers = s.value("num_layers", c.selector.num_layers);
      c.selector.num_heads = s.value("num_heads", c.selector.num_heads);
      c.selector.ffn_dim = s.value("ffn_dim", c.selector.ffn_dim);
      c.selector.lambda0 = s.value("lambda0", c.selector.lambda0);
      c.selector.lambda1 = s.value("lambda1", c.selector.lambda1);
      c.selector.threshold = s.value("threshold", c.selector.threshold);
      c.selector.max_proposals = s.value("max_proposals", c.selector.max_proposals);
      c.selector.max_constraints = s.value("max_constraints", c.selector.max_constraints);
      c.selector.excluded_classes = s.value("excluded_classes", c.selector.excluded_classes);
    }
    if (j.contains("captioner")) c.captioner = j["captioner"].get<captioner::CaptionerConfig>();
    if (j.contains("train")) c.train = j["train"].get<TrainConfig>();
    if (j.contains("eval_modes")) {
      c.eval_modes.clear();
      for (const auto& m : j["eval_modes"]) c.eval_modes.push_back(constraint_mode_from_string(m));
    }
    c.evaluate_pretrained = j.value("evaluate_pretrained", c.evaluate_pretrained);
    if (j.contains("seed")) {
      const std::uint64_t seed = j["seed"];
      c.data.seed = seed;
      c.train.seed = seed;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream* log) {
  cfg.validate();
  auto say = [&](const std::string& s) {
    if (log) *log << s << std::endl;
  };
  const auto syn = cfg.data.synonym_table();
  const auto dataset = data::gen_dataset(cfg.data);
  const auto splits = data::apply_heldout(dataset, cfg.data);
  const auto vocab = data::build_vocabulary(cfg.data);
  say("data: " + std::to_string(splits.captioner_train.size()) + " captioner scenes, " +
      std::to_string(splits.selector_train.size()) + " selector scenes, " + std::to_string(splits.val.size()) +
      " val, " + std::to_string(splits.test.size()) + " test");

  PipelineResult out;
  nlohmann::json& rep = out.report;
  rep["config"] = cfg;
  std::size_t out_domain = 0;
  for (const auto& s : splits.test) out_domain += data::is_out_domain(s, cfg.data) ? 1 : 0;
  rep["data"] = {{"captioner_train", splits.captioner_train.size()},
                 {"selector_train", splits.selector_train.size()},
                 {"val", splits.val.size()},
                 {"test", splits.test.size()},
                 {"test_out_domain", out_domain},
                 {"vocab_size", vocab.size()},
                 {"dataset_hash", num::content_hash(data::to_jsonl(dataset))}};

  selector::RegionSelector sel(cfg.selector, cfg.train.seed * 1000 + 1);
  rep["selector"] = to_json(train_selector(sel, splits.selector_train, splits.val, syn, cfg.train));
  out.checkpoints["selector"] = num::serialize_checkpoint(sel.named());
  say("selector trained");

  captioner::Captioner cap(cfg.captioner, vocab, cfg.train.seed * 1000 + 2);
  rep["captioner"] = to_json(pretrain_captioner(cap, splits.captioner_train, splits.val, cfg.train));
  out.checkpoints["captioner_xent"] = num::serialize_checkpoint(cap.named());
  say("captioner pre-trained");

  auto eval_all = [&](const std::string& key) {
    for (auto m : cfg.eval_modes) {
      const auto run = decode_eval(cap, &sel, splits.test, m, cfg.data, cfg.train);
      rep[key][to_string(m)] = to_json(run, key == "eval");
      say(key + " " + to_string(m) + ": F1 " + std::to_string(run.report.mean_f1) + ", out-domain CIDEr-D " +
          std::to_string(run.report.out_domain.cider_d));
    }
  };
  if (cfg.evaluate_pretrained) eval_all("eval_pretrained");

  rep["finetune"] = to_json(finetune_scst_dgbs(cap, splits.captioner_train, splits.val, cfg.data, cfg.train));
  out.checkpoints["captioner_scst"] = num::serialize_checkpoint(cap.named());
  say("captioner fine-tuned");
  eval_all("eval");

  for (const auto& [name, bytes] : out.checkpoints) rep["checkpoints"][name] = num::content_hash(bytes);
  return out;
}

}  // namespace nocap::train
