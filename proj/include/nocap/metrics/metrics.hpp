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

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nocap/text.hpp"

namespace nocap::metrics {

using NgramCounts = std::map<Tokens, std::size_t>;

// Counts of every n-gram with 1 <= n <= max_n.
NgramCounts count_ngrams(const Tokens& tokens, std::size_t max_n);

// Document frequencies over images: an n-gram counts once per image if any
// of that image's references contains it.
class IdfTable {
 public:
  static constexpr std::size_t kMaxN = 4;

  IdfTable() = default;
  explicit IdfTable(const std::vector<std::vector<Tokens>>& reference_sets);

  std::size_t corpus_size() const { return corpus_size_; }
  std::size_t df(const Tokens& ngram) const;
  double log_corpus_size() const { return log_n_; }

 private:
  std::map<Tokens, std::size_t> df_;
  std::size_t corpus_size_ = 0;
  double log_n_ = 0.0;
};

constexpr double kCiderSigma = 6.0;

double cider_d(const Tokens& candidate, const std::vector<Tokens>& references, const IdfTable& idf);

// Sentence-level BLEU-4, uniform weights. Zero n-gram matches are replaced by
// kBleuEpsilon before taking logs.
constexpr double kBleuEpsilon = 0.1;
double bleu4(const Tokens& candidate, const std::vector<Tokens>& references);
// Corpus-level BLEU-4 (aggregate clipped counts, no smoothing).
double corpus_bleu4(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references);

struct EvalRecord {
  std::uint64_t scene_id = 0;
  Tokens generated;
  std::vector<Tokens> references;
  std::vector<std::string> classes;  // detector classes present in the scene
};

struct F1Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision() const;
  double recall() const;
  double f1() const;
};

// Image-level counting: predicted = generated caption mentions the class (or a
// listed form); actual = some reference mentions it.
F1Counts f1_counts(const std::vector<EvalRecord>& records, const std::string& class_word, const SynonymTable& syn);
double f1_class(const std::vector<EvalRecord>& records, const std::string& class_word, const SynonymTable& syn);

struct SplitScores {
  std::size_t count = 0;
  double cider_d = 0.0;
  double bleu4 = 0.0;  // mean sentence BLEU-4
  double corpus_bleu4 = 0.0;
};

struct EvalReport {
  std::map<std::string, double> f1;  // per held-out class
  double mean_f1 = 0.0;
  SplitScores in_domain;
  SplitScores out_domain;
  SplitScores overall;
};

// A record is out-of-domain when any reference mentions a held-out class.
bool is_out_domain(const EvalRecord& r, const std::vector<std::string>& heldout, const SynonymTable& syn);

// IDF is built once from all records' references.
EvalReport evaluate(const std::vector<EvalRecord>& records, const std::vector<std::string>& heldout,
                    const SynonymTable& syn);

nlohmann::json to_json(const EvalReport& r);

}  // namespace nocap::metrics
