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

#include "nocap/decoder/search.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "nocap/error.hpp"
#include "nocap/numerics/ops.hpp"

namespace nocap::decoder {

ScoreMode score_mode_from_string(const std::string& s) {
  if (s == "none" || s == "sum") return ScoreMode::kSum;
  if (s == "mean") return ScoreMode::kMean;
  throw ConfigError("unknown score mode: " + s);
}

std::string to_string(ScoreMode m) { return m == ScoreMode::kSum ? "none" : "mean"; }

double Hypothesis::score(ScoreMode mode) const {
  if (mode == ScoreMode::kMean && !tokens.empty()) return logprob / static_cast<double>(tokens.size());
  return logprob;
}

ConstraintSet::ConstraintSet(const std::vector<std::string>& words, const Vocabulary& vocab, std::size_t max_size) {
  for (const auto& w : words) {
    if (std::find(words_.begin(), words_.end(), w) != words_.end()) continue;
    if (!vocab.contains(w)) throw ValidationError("constraint word not in vocabulary: " + w);
    const TokenId id = vocab.id(w);
    if (Vocabulary::is_reserved(id)) throw ValidationError("constraint word is reserved: " + w);
    words_.push_back(w);
    ids_.push_back(id);
  }
  if (ids_.size() > max_size) {
    throw ValidationError("too many constraints: " + std::to_string(ids_.size()) + " > " + std::to_string(max_size));
  }
}

std::optional<std::size_t> ConstraintSet::index_of(TokenId id) const {
  const auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

bool is_banned(TokenId id) {
  return id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kUnk;
}

namespace {

// A proposed hypothesis before pruning; the language model is only advanced
// for survivors.
struct Candidate {
  const Hypothesis* parent = nullptr;
  std::vector<TokenId> tokens;
  double logprob = 0.0;
  bool carried = false;  // finished parent copied unchanged
  bool forced = false;
  std::size_t met_index = SIZE_MAX;  // constraint newly covered by the last token
};

double candidate_score(const Candidate& c, ScoreMode mode) {
  if (mode == ScoreMode::kMean) return c.logprob / static_cast<double>(c.tokens.size());
  return c.logprob;
}

// Score descending, then token ids lexicographic.
void rank(std::vector<Candidate>& cands, ScoreMode mode) {
  std::sort(cands.begin(), cands.end(), [mode](const Candidate& a, const Candidate& b) {
    const double sa = candidate_score(a, mode), sb = candidate_score(b, mode);
    if (sa != sb) return sa > sb;
    return a.tokens < b.tokens;
  });
}

bool better(const Hypothesis& a, const Hypothesis& b, ScoreMode mode) {
  const double sa = a.score(mode), sb = b.score(mode);
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

Candidate extend(const Hypothesis& h, TokenId tok) {
  Candidate c;
  c.parent = &h;
  c.tokens = h.tokens;
  c.tokens.push_back(tok);
  c.logprob = h.logprob + h.state->log_probs[tok];
  return c;
}

Candidate carry(const Hypothesis& h) {
  Candidate c;
  c.parent = &h;
  c.tokens = h.tokens;
  c.logprob = h.logprob;
  c.carried = true;
  return c;
}

Hypothesis materialize(const LanguageModel& lm, const Candidate& c, bool can_advance) {
  if (c.carried) return *c.parent;
  const Hypothesis& p = *c.parent;
  Hypothesis h;
  h.tokens = c.tokens;
  h.logprob = c.logprob;
  h.met = p.met;
  h.coverage = p.coverage;
  h.forced_positions = p.forced_positions;
  if (c.met_index != SIZE_MAX) {
    h.met[c.met_index] = true;
    ++h.coverage;
  }
  if (c.forced) h.forced_positions.push_back(h.tokens.size() - 1);
  h.finished = h.tokens.back() == Vocabulary::kEos;
  if (!std::isfinite(h.logprob)) throw DivergenceError("non-finite hypothesis log-probability");
  if (!h.finished && can_advance) h.state = lm.advance(p.state, h.tokens.back());
  return h;
}

Hypothesis root(const LanguageModel& lm, std::size_t n) {
  Hypothesis h;
  h.met.assign(n, false);
  h.state = lm.start();
  return h;
}

SearchResult finish(std::vector<Hypothesis> finals, const std::vector<Hypothesis>& last, std::size_t k, ScoreMode mode) {
  SearchResult out;
  std::sort(finals.begin(), finals.end(), [mode](const Hypothesis& a, const Hypothesis& b) { return better(a, b, mode); });
  finals.erase(std::unique(finals.begin(), finals.end(),
                           [](const Hypothesis& a, const Hypothesis& b) { return a.tokens == b.tokens; }),
               finals.end());
  if (!finals.empty()) {
    out.best = finals.front();
    out.finished = true;
    if (finals.size() > k) finals.resize(k);
    out.finalists = std::move(finals);
  } else {
    for (const auto& h : last) {
      if (out.best.tokens.empty() || better(h, out.best, mode)) out.best = h;
    }
  }
  out.best.state.reset();
  for (auto& h : out.finalists) h.state.reset();
  return out;
}

void check_options(const LanguageModel& lm, const SearchOptions& opts) {
  if (opts.beam_size == 0) throw ContractError("beam size must be at least 1");
  if (opts.max_tokens == 0) throw ContractError("max_tokens must be at least 1");
  if (lm.vocab_size() <= Vocabulary::kNumReserved) throw ContractError("vocabulary has no ordinary tokens");
}

void write_trace(const SearchOptions& opts, std::size_t t, std::size_t c, const std::vector<Hypothesis>& cell) {
  if (opts.trace == nullptr) return;
  nlohmann::json hyps = nlohmann::json::array();
  for (const auto& h : cell) {
    nlohmann::json toks = nlohmann::json::array();
    for (TokenId id : h.tokens) toks.push_back(opts.token_name ? opts.token_name(id) : std::to_string(id));
    hyps.push_back({{"tokens", toks}, {"logprob", h.logprob}, {"score", h.score(opts.score_mode)},
                    {"finished", h.finished}, {"coverage", h.coverage}});
  }
  *opts.trace << nlohmann::json{{"t", t}, {"c", c}, {"hyps", hyps}}.dump() << '\n';
}

}  // namespace

SearchResult beam_search(const LanguageModel& lm, const SearchOptions& opts) {
  check_options(lm, opts);
  const std::size_t V = lm.vocab_size(), T = opts.max_tokens, k = opts.beam_size;
  std::vector<Hypothesis> beam = {root(lm, 0)};
  std::vector<Hypothesis> finals;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<Candidate> cands;
    for (const auto& h : beam) {
      if (h.finished) {
        cands.push_back(carry(h));
        continue;
      }
      for (TokenId tok = 0; tok < V; ++tok) {
        if (!is_banned(tok)) cands.push_back(extend(h, tok));
      }
    }
    rank(cands, opts.score_mode);
    if (cands.size() > k) cands.resize(k);
    std::vector<Hypothesis> next;
    for (const auto& c : cands) {
      next.push_back(materialize(lm, c, t + 1 < T));
      if (next.back().finished && !c.carried) finals.push_back(next.back());
    }
    beam = std::move(next);
    write_trace(opts, t, 0, beam);
  }
  return finish(std::move(finals), beam, k, opts.score_mode);
}

std::vector<Hypothesis> add_constr(const LanguageModel& lm, const Hypothesis& h, const ConstraintSet& constraints) {
  if (h.finished) throw ContractError("add_constr: hypothesis already finished");
  if (h.met.size() != constraints.size()) throw ContractError("add_constr: coverage vector does not match constraints");
  std::vector<Hypothesis> out;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (h.met[i]) continue;
    Candidate c = extend(h, constraints.ids()[i]);
    c.forced = true;
    c.met_index = i;
    out.push_back(materialize(lm, c, true));
  }
  return out;
}

RowWindow active_rows(std::size_t n, std::size_t t, std::size_t max_tokens) {
  return {n + t > max_tokens ? n + t - max_tokens : 0, std::min(t + 1, n)};
}

SearchResult grid_beam_search(const LanguageModel& lm, const ConstraintSet& constraints, const SearchOptions& opts) {
  check_options(lm, opts);
  const std::size_t V = lm.vocab_size(), T = opts.max_tokens, k = opts.beam_size, n = constraints.size();
  if (n >= T) {
    throw ValidationError("infeasible constraints: " + std::to_string(n) + " words need more than " +
                          std::to_string(T) + " tokens with EOS");
  }
  std::vector<std::vector<Hypothesis>> prev(n + 1);
  prev[0].push_back(root(lm, n));
  std::vector<Hypothesis> finals;
  for (std::size_t t = 0; t < T; ++t) {
    const RowWindow win = active_rows(n, t, T);
    auto active = [&](std::size_t c) { return c >= win.lo && c <= win.hi; };
    std::vector<std::vector<Candidate>> cands(n + 1);
    for (std::size_t c = 0; c <= n; ++c) {
      for (const auto& h : prev[c]) {
        if (h.finished) {
          if (active(c)) cands[c].push_back(carry(h));
          continue;
        }
        // Step extensions over the whole vocabulary, routed by coverage.
        for (TokenId tok = 0; tok < V; ++tok) {
          if (is_banned(tok)) continue;
          const auto idx = constraints.index_of(tok);
          const bool covers = idx && !h.met[*idx];
          const std::size_t row = covers ? c + 1 : c;
          if (!active(row)) continue;
          Candidate cand = extend(h, tok);
          if (covers) cand.met_index = *idx;
          cands[row].push_back(std::move(cand));
        }
        // Constraint insertions; these coincide with step extensions that
        // pick the same word and are merged below.
        for (std::size_t i = 0; i < n; ++i) {
          if (h.met[i] || !active(c + 1)) continue;
          Candidate cand = extend(h, constraints.ids()[i]);
          cand.forced = true;
          cand.met_index = i;
          cands[c + 1].push_back(std::move(cand));
        }
      }
    }
    std::vector<std::vector<Hypothesis>> next(n + 1);
    for (std::size_t c = 0; c <= n; ++c) {
      auto& cell = cands[c];
      if (cell.empty()) continue;
      if (!active(c)) throw ContractError("grid invariant: candidate outside feasibility window");
      rank(cell, opts.score_mode);
      std::vector<Candidate> merged;
      for (auto& cand : cell) {
        if (!merged.empty() && merged.back().tokens == cand.tokens && merged.back().parent == cand.parent) {
          merged.back().forced = merged.back().forced || cand.forced;
          continue;
        }
        if (merged.size() == k) break;
        merged.push_back(std::move(cand));
      }
      for (const auto& cand : merged) {
        Hypothesis h = materialize(lm, cand, t + 1 < T);
        if (h.coverage != c) throw ContractError("grid invariant: hypothesis coverage does not match its row");
        if (!h.finished && h.tokens.size() != t + 1) throw ContractError("grid invariant: hypothesis length mismatch");
        if (c == n && h.finished && !cand.carried) finals.push_back(h);
        next[c].push_back(std::move(h));
      }
    }
    for (std::size_t c = 0; c <= n; ++c) {
      if (active(c)) write_trace(opts, t, c, next[c]);
    }
    prev = std::move(next);
  }
  std::vector<Hypothesis> last;
  for (auto& h : prev[n]) {
    if (!h.finished) last.push_back(std::move(h));
  }
  return finish(std::move(finals), last, k, opts.score_mode);
}

num::Var dgbs_sequence_logprob(num::Tape& tape, const std::vector<TokenId>& tokens,
                               const std::vector<std::size_t>& forced_positions, const DifferentiableLm& lm) {
  if (tokens.empty()) throw ContractError("dgbs_sequence_logprob: empty sequence");
  for (std::size_t p : forced_positions) {
    if (p >= tokens.size()) throw ContractError("dgbs_sequence_logprob: forced position out of range");
  }
  std::vector<TokenId> inputs = {Vocabulary::kBos};
  inputs.insert(inputs.end(), tokens.begin(), tokens.end() - 1);
  num::Var rows = lm.log_prob_rows(tape, inputs);
  std::vector<std::pair<std::size_t, std::size_t>> picks;
  for (std::size_t i = 0; i < tokens.size(); ++i) picks.emplace_back(i, tokens[i]);
  return num::sum(num::gather_elements(rows, picks));
}

}  // namespace nocap::decoder
