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

// nocap: command-line driver for data generation, training, decoding and
// evaluation. Exit codes: 0 success, 1 config error, 2 training divergence,
// 3 any other failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "nocap/data/generator.hpp"
#include "nocap/error.hpp"
#include "nocap/numerics/checkpoint.hpp"
#include "nocap/train/train.hpp"

namespace fs = std::filesystem;
using nocap::train::ConstraintMode;
using nocap::train::PipelineConfig;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string out = "nocap_out";
  bool trace_grid = false;
};

PipelineConfig load_config(const Options& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw nocap::ConfigError("cannot open config: " + o.config);
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw nocap::ConfigError(std::string("malformed config: ") + e.what());
    }
  }
  if (o.seed) j["seed"] = *o.seed;
  auto cfg = nocap::train::pipeline_config_from_json(j);
  cfg.validate();
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw nocap::Error("cannot write " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

struct Data {
  nocap::SynonymTable syn;
  nocap::data::HeldOutSplits splits;
  nocap::Vocabulary vocab;
};

Data make_data(const PipelineConfig& cfg) {
  const auto scenes = nocap::data::gen_dataset(cfg.data);
  return {cfg.data.synonym_table(), nocap::data::apply_heldout(scenes, cfg.data), nocap::data::build_vocabulary(cfg.data)};
}

nocap::selector::RegionSelector load_selector(const PipelineConfig& cfg, const fs::path& dir) {
  nocap::selector::RegionSelector sel(cfg.selector, cfg.train.seed * 1000 + 1);
  nocap::num::restore_checkpoint(nocap::num::load_checkpoint(dir / "selector.ckpt"), sel.named());
  return sel;
}

nocap::captioner::Captioner load_captioner(const PipelineConfig& cfg, const Data& d, const fs::path& path) {
  nocap::captioner::Captioner cap(cfg.captioner, d.vocab, cfg.train.seed * 1000 + 2);
  nocap::num::restore_checkpoint(nocap::num::load_checkpoint(path), cap.named());
  return cap;
}

fs::path latest_captioner(const fs::path& dir) {
  return fs::exists(dir / "captioner_scst.ckpt") ? dir / "captioner_scst.ckpt" : dir / "captioner_xent.ckpt";
}

std::vector<ConstraintMode> modes_of(const Options& o, const PipelineConfig& cfg) {
  if (o.mode.empty()) return cfg.eval_modes;
  return {nocap::train::constraint_mode_from_string(o.mode)};
}

void cmd_gen_data(const Options& o) {
  const auto cfg = load_config(o);
  const auto scenes = nocap::data::gen_dataset(cfg.data);
  const fs::path dir(o.out);
  write_file(dir / "dataset.jsonl", nocap::data::to_jsonl(scenes));
  write_json(dir / "vocab.json", nocap::data::build_vocabulary(cfg.data).to_json());
  std::cout << "wrote " << scenes.size() << " scenes to " << (dir / "dataset.jsonl").string() << "\n";
}

void cmd_train_selector(const Options& o) {
  const auto cfg = load_config(o);
  const auto d = make_data(cfg);
  nocap::selector::RegionSelector sel(cfg.selector, cfg.train.seed * 1000 + 1);
  const auto logs = nocap::train::train_selector(sel, d.splits.selector_train, d.splits.val, d.syn, cfg.train);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  nocap::num::save_checkpoint(dir / "selector.ckpt", sel.named());
  write_json(dir / "selector_log.json", nocap::train::to_json(logs));
  std::cout << "selector: val selection F1 " << logs.back().val.at("selection_f1") << "\n";
}

void cmd_train_captioner(const Options& o) {
  const auto cfg = load_config(o);
  const auto d = make_data(cfg);
  nocap::captioner::Captioner cap(cfg.captioner, d.vocab, cfg.train.seed * 1000 + 2);
  const auto logs = nocap::train::pretrain_captioner(cap, d.splits.captioner_train, d.splits.val, cfg.train);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  nocap::num::save_checkpoint(dir / "captioner_xent.ckpt", cap.named());
  write_json(dir / "captioner_log.json", nocap::train::to_json(logs));
  std::cout << "captioner: val perplexity " << logs.back().val.at("perplexity") << "\n";
}

void cmd_finetune(const Options& o) {
  const auto cfg = load_config(o);
  const auto d = make_data(cfg);
  const fs::path dir(o.out);
  auto cap = load_captioner(cfg, d, dir / "captioner_xent.ckpt");
  const auto logs = nocap::train::finetune_scst_dgbs(cap, d.splits.captioner_train, d.splits.val, cfg.data, cfg.train);
  nocap::num::save_checkpoint(dir / "captioner_scst.ckpt", cap.named());
  write_json(dir / "finetune_log.json", nocap::train::to_json(logs));
  std::cout << "finetune: best val CIDEr-D " << [&] {
    double best = 0.0;
    for (const auto& l : logs) best = std::max(best, l.val.at("cider_d"));
    return best;
  }() << "\n";
}

void cmd_decode(const Options& o, bool write_report) {
  const auto cfg = load_config(o);
  const auto d = make_data(cfg);
  const fs::path dir(o.out);
  const auto cap = load_captioner(cfg, d, latest_captioner(dir));
  std::optional<nocap::selector::RegionSelector> sel;
  if (fs::exists(dir / "selector.ckpt")) sel.emplace(load_selector(cfg, dir));
  nlohmann::json report = nlohmann::json::object();
  for (auto m : modes_of(o, cfg)) {
    const auto name = nocap::train::to_string(m);
    std::ofstream trace;
    if (o.trace_grid) trace.open(dir / ("trace_" + name + ".jsonl"), std::ios::binary);
    const auto run = nocap::train::decode_eval(cap, sel ? &*sel : nullptr, d.splits.test, m, cfg.data, cfg.train,
                                               o.trace_grid ? &trace : nullptr);
    if (write_report) {
      report[name] = nocap::train::to_json(run, false);
      std::cout << name << ": out-domain F1 " << run.report.mean_f1 << ", out-domain CIDEr-D "
                << run.report.out_domain.cider_d << ", CIDEr-D " << run.report.overall.cider_d << "\n";
    } else {
      std::ostringstream lines;
      const auto j = nocap::train::to_json(run, true);
      for (const auto& s : j.at("captions")) lines << s.dump() << "\n";
      write_file(dir / ("captions_" + name + ".jsonl"), lines.str());
      std::cout << name << ": " << run.satisfied << "/" << run.constrained << " constrained captions satisfied\n";
    }
  }
  if (write_report) write_json(dir / "eval_report.json", report);
}

void cmd_run(const Options& o) {
  const auto cfg = load_config(o);
  const auto result = nocap::train::run_pipeline(cfg, &std::cout);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  for (const auto& [name, bytes] : result.checkpoints) write_file(dir / (name + ".ckpt"), bytes);
  write_json(dir / "report.json", result.report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nocap: novel-object captioning with a region selector and grid beam search"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub, bool with_mode) {
    sub->add_option("--config", o.config, "JSON config path")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "overrides data and training seeds");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    if (with_mode) {
      sub->add_option("--mode", o.mode, "constraint mode: none, top1, top2, top3, selector, oracle (default: all)");
      sub->add_flag("--trace-grid", o.trace_grid, "write a JSONL trace of every grid cell");
    }
  };
  struct Sub {
    const char* name;
    const char* help;
    bool mode;
    std::function<void()> run;
  };
  const std::vector<Sub> subs = {
      {"gen-data", "generate the synthetic dataset", false, [&] { cmd_gen_data(o); }},
      {"train-selector", "train the region selector", false, [&] { cmd_train_selector(o); }},
      {"train-captioner", "pre-train the captioner with cross-entropy", false, [&] { cmd_train_captioner(o); }},
      {"finetune", "fine-tune the captioner with SCST through grid beam search", false, [&] { cmd_finetune(o); }},
      {"decode", "decode the test split", true, [&] { cmd_decode(o, false); }},
      {"eval", "decode and score the test split", true, [&] { cmd_decode(o, true); }},
      {"run", "run every phase and write report.json", false, [&] { cmd_run(o); }},
  };
  for (const auto& s : subs) add_common(app.add_subcommand(s.name, s.help), s.mode);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    for (const auto& s : subs) {
      if (app.got_subcommand(s.name)) s.run();
    }
  } catch (const nocap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const nocap::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
