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
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nocap/decoder/language_model.hpp"
#include "nocap/numerics/tape.hpp"
#include "nocap/text.hpp"

namespace nocap::decoder {

enum class ScoreMode { kSum, kMean };

ScoreMode score_mode_from_string(const std::string& s);
std::string to_string(ScoreMode m);

struct Hypothesis {
  std::vector<TokenId> tokens;  // generated ids, BOS excluded
  double logprob = 0.0;
  std::vector<bool> met;  // parallel to ConstraintSet::ids
  std::size_t coverage = 0;
  bool finished = false;
  std::vector<std::size_t> forced_positions;  // indices into tokens
  LanguageModel::StatePtr state;

  double score(ScoreMode mode) const;
};

class ConstraintSet {
 public:
  ConstraintSet() = default;
  // Drops duplicates, keeps first-seen order. Throws ValidationError for
  // unknown or reserved words and for more than `max_size` distinct words.
  ConstraintSet(const std::vector<std::string>& words, const Vocabulary& vocab, std::size_t max_size = 5);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<TokenId>& ids() const { return ids_; }
  // Index of `id` in the set, if it is a constraint.
  std::optional<std::size_t> index_of(TokenId id) const;

 private:
  std::vector<std::string> words_;
  std::vector<TokenId> ids_;
};

struct SearchOptions {
  std::size_t beam_size = 5;
  std::size_t max_tokens = 15;  // T: generated tokens including EOS
  ScoreMode score_mode = ScoreMode::kSum;
  // Optional JSONL sink, one line per (t, c) cell.
  std::ostream* trace = nullptr;
  std::function<std::string(TokenId)> token_name;
};

struct SearchResult {
  Hypothesis best;
  bool finished = false;  // false: no finished hypothesis, `best` is the fallback
  std::vector<Hypothesis> finalists;  // finished hypotheses, best first, at most beam_size
};

// Ids never generated by either search.
bool is_banned(TokenId id);

SearchResult beam_search(const LanguageModel& lm, const SearchOptions& opts);

// Extensions of `h` by each unmet constraint word.
std::vector<Hypothesis> add_constr(const LanguageModel& lm, const Hypothesis& h, const ConstraintSet& constraints);

// Rows of column t that can hold hypotheses: [lo, hi] inclusive.
struct RowWindow {
  std::size_t lo, hi;
};
RowWindow active_rows(std::size_t n, std::size_t t, std::size_t max_tokens);

SearchResult grid_beam_search(const LanguageModel& lm, const ConstraintSet& constraints, const SearchOptions& opts);

// Log-probability rows for a whole input sequence, recorded on a tape.
class DifferentiableLm {
 public:
  virtual ~DifferentiableLm() = default;
  // inputs = BOS + prefix; returns [len(inputs) x |V|] log-softmax rows.
  virtual num::Var log_prob_rows(num::Tape& tape, const std::vector<TokenId>& inputs) const = 0;
};

// Sum over every generated position, free or forced, of log p(token | prefix).
num::Var dgbs_sequence_logprob(num::Tape& tape, const std::vector<TokenId>& tokens,
                               const std::vector<std::size_t>& forced_positions, const DifferentiableLm& lm);

}  // namespace nocap::decoder
