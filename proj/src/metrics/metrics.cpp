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

#include "nocap/metrics/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

namespace nocap::metrics {

NgramCounts count_ngrams(const Tokens& tokens, std::size_t max_n) {
  NgramCounts out;
  for (std::size_t n = 1; n <= max_n; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      ++out[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
  }
  return out;
}

IdfTable::IdfTable(const std::vector<std::vector<Tokens>>& reference_sets) : corpus_size_(reference_sets.size()) {
  for (const auto& refs : reference_sets) {
    std::set<Tokens> seen;
    for (const auto& r : refs) {
      for (const auto& [g, c] : count_ngrams(r, kMaxN)) seen.insert(g);
    }
    for (const auto& g : seen) ++df_[g];
  }
  log_n_ = corpus_size_ > 0 ? std::log(static_cast<double>(corpus_size_)) : 0.0;
}

std::size_t IdfTable::df(const Tokens& ngram) const {
  const auto it = df_.find(ngram);
  return it == df_.end() ? 0 : it->second;
}

namespace {

struct CiderVector {
  std::array<std::map<Tokens, double>, IdfTable::kMaxN> vec;
  std::array<double, IdfTable::kMaxN> norm2{};
  std::size_t length = 0;
};

CiderVector cider_vector(const Tokens& tokens, const IdfTable& idf) {
  CiderVector out;
  out.length = tokens.size();
  for (const auto& [g, tf] : count_ngrams(tokens, IdfTable::kMaxN)) {
    const double df = std::log(std::max(1.0, static_cast<double>(idf.df(g))));
    const double v = static_cast<double>(tf) * (idf.log_corpus_size() - df);
    const std::size_t n = g.size() - 1;
    out.vec[n][g] = v;
    out.norm2[n] += v * v;
  }
  return out;
}

double cider_sim(const CiderVector& h, const CiderVector& r) {
  const double delta = static_cast<double>(h.length) - static_cast<double>(r.length);
  const double penalty = std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
  double total = 0.0;
  for (std::size_t n = 0; n < IdfTable::kMaxN; ++n) {
    double val = 0.0;
    for (const auto& [g, vh] : h.vec[n]) {
      const auto it = r.vec[n].find(g);
      if (it != r.vec[n].end()) val += std::min(vh, it->second) * it->second;
    }
    if (h.norm2[n] != 0.0 && r.norm2[n] != 0.0) val /= std::sqrt(h.norm2[n] * r.norm2[n]);
    total += val * penalty;
  }
  return total / static_cast<double>(IdfTable::kMaxN);
}

}  // namespace

double cider_d(const Tokens& candidate, const std::vector<Tokens>& references, const IdfTable& idf) {
  if (candidate.empty() || references.empty()) return 0.0;
  const CiderVector h = cider_vector(candidate, idf);
  double sum = 0.0;
  for (const auto& ref : references) sum += cider_sim(h, cider_vector(ref, idf));
  return sum / static_cast<double>(references.size()) * 10.0;
}

namespace {

struct BleuStats {
  std::array<double, 4> matches{};
  std::array<double, 4> totals{};
  double hyp_len = 0.0;
  double ref_len = 0.0;
};

// Closest reference length; ties go to the shorter one.
std::size_t closest_ref_length(std::size_t hyp, const std::vector<Tokens>& refs) {
  std::size_t best = std::numeric_limits<std::size_t>::max(), best_diff = best;
  for (const auto& r : refs) {
    const std::size_t diff = r.size() > hyp ? r.size() - hyp : hyp - r.size();
    if (diff < best_diff || (diff == best_diff && r.size() < best)) {
      best = r.size();
      best_diff = diff;
    }
  }
  return best;
}

BleuStats bleu_stats(const Tokens& cand, const std::vector<Tokens>& refs) {
  BleuStats s;
  s.hyp_len = static_cast<double>(cand.size());
  s.ref_len = refs.empty() ? 0.0 : static_cast<double>(closest_ref_length(cand.size(), refs));
  std::map<Tokens, std::size_t> max_ref;
  for (const auto& r : refs) {
    for (const auto& [g, c] : count_ngrams(r, 4)) max_ref[g] = std::max(max_ref[g], c);
  }
  for (const auto& [g, c] : count_ngrams(cand, 4)) {
    const auto it = max_ref.find(g);
    s.matches[g.size() - 1] += static_cast<double>(std::min(c, it == max_ref.end() ? 0 : it->second));
  }
  for (std::size_t n = 1; n <= 4; ++n) {
    s.totals[n - 1] = cand.size() >= n ? static_cast<double>(cand.size() - n + 1) : 0.0;
  }
  return s;
}

double brevity_penalty(double hyp_len, double ref_len) {
  if (hyp_len >= ref_len) return 1.0;
  if (hyp_len == 0.0) return 0.0;
  return std::exp(1.0 - ref_len / hyp_len);
}

}  // namespace

double bleu4(const Tokens& candidate, const std::vector<Tokens>& references) {
  if (candidate.empty() || references.empty()) return 0.0;
  const BleuStats s = bleu_stats(candidate, references);
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    const double m = s.matches[n] > 0.0 ? s.matches[n] : kBleuEpsilon;
    log_sum += std::log(m / std::max(s.totals[n], 1.0));
  }
  return brevity_penalty(s.hyp_len, s.ref_len) * std::exp(log_sum / 4.0);
}

double corpus_bleu4(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references) {
  BleuStats total;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const BleuStats s = bleu_stats(candidates[i], references.at(i));
    for (std::size_t n = 0; n < 4; ++n) {
      total.matches[n] += s.matches[n];
      total.totals[n] += s.totals[n];
    }
    total.hyp_len += s.hyp_len;
    total.ref_len += s.ref_len;
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (total.matches[n] == 0.0) return 0.0;
    log_sum += std::log(total.matches[n] / total.totals[n]);
  }
  return brevity_penalty(total.hyp_len, total.ref_len) * std::exp(log_sum / 4.0);
}

double F1Counts::precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
double F1Counts::recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
double F1Counts::f1() const {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

F1Counts f1_counts(const std::vector<EvalRecord>& records, const std::string& class_word, const SynonymTable& syn) {
  F1Counts c;
  for (const auto& r : records) {
    const bool predicted = syn.mentioned_in(r.generated, class_word);
    const bool actual = std::any_of(r.references.begin(), r.references.end(),
                                    [&](const Tokens& ref) { return syn.mentioned_in(ref, class_word); });
    if (predicted && actual) ++c.tp;
    if (predicted && !actual) ++c.fp;
    if (!predicted && actual) ++c.fn;
  }
  return c;
}

double f1_class(const std::vector<EvalRecord>& records, const std::string& class_word, const SynonymTable& syn) {
  return f1_counts(records, class_word, syn).f1();
}

bool is_out_domain(const EvalRecord& r, const std::vector<std::string>& heldout, const SynonymTable& syn) {
  for (const auto& ref : r.references) {
    for (const auto& w : heldout) {
      if (syn.mentioned_in(ref, w)) return true;
    }
  }
  return false;
}

namespace {

SplitScores split_scores(const std::vector<const EvalRecord*>& records, const IdfTable& idf) {
  SplitScores s;
  s.count = records.size();
  if (records.empty()) return s;
  std::vector<Tokens> cands;
  std::vector<std::vector<Tokens>> refs;
  for (const auto* r : records) {
    s.cider_d += cider_d(r->generated, r->references, idf);
    s.bleu4 += bleu4(r->generated, r->references);
    cands.push_back(r->generated);
    refs.push_back(r->references);
  }
  s.cider_d /= static_cast<double>(records.size());
  s.bleu4 /= static_cast<double>(records.size());
  s.corpus_bleu4 = corpus_bleu4(cands, refs);
  return s;
}

nlohmann::json split_json(const SplitScores& s) {
  return {{"count", s.count}, {"cider_d", s.cider_d}, {"bleu4", s.bleu4}, {"corpus_bleu4", s.corpus_bleu4}};
}

}  // namespace

EvalReport evaluate(const std::vector<EvalRecord>& records, const std::vector<std::string>& heldout,
                    const SynonymTable& syn) {
  std::vector<std::vector<Tokens>> ref_sets;
  for (const auto& r : records) ref_sets.push_back(r.references);
  const IdfTable idf(ref_sets);
  EvalReport rep;
  for (const auto& w : heldout) {
    rep.f1[w] = f1_class(records, w, syn);
    rep.mean_f1 += rep.f1[w];
  }
  if (!heldout.empty()) rep.mean_f1 /= static_cast<double>(heldout.size());
  std::vector<const EvalRecord*> in, out, all;
  for (const auto& r : records) {
    (is_out_domain(r, heldout, syn) ? out : in).push_back(&r);
    all.push_back(&r);
  }
  rep.in_domain = split_scores(in, idf);
  rep.out_domain = split_scores(out, idf);
  rep.overall = split_scores(all, idf);
  return rep;
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"f1", r.f1},
          {"mean_f1", r.mean_f1},
          {"in_domain", split_json(r.in_domain)},
          {"out_domain", split_json(r.out_domain)},
          {"overall", split_json(r.overall)}};
}

}  // namespace nocap::metrics
