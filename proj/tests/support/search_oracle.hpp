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

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "nocap/decoder/search.hpp"
#include "nocap/numerics/random.hpp"
#include "nocap/text.hpp"

namespace nocap::testing {

using decoder::is_banned;
using decoder::LanguageModel;

// Fixed random next-token distribution for every prefix.
class RandomLm : public LanguageModel {
 public:
  RandomLm(std::size_t vocab, std::uint64_t seed, double temperature = 1.0)
      : vocab_(vocab), seed_(seed), temperature_(temperature) {}

  struct PrefixState : State {
    std::vector<TokenId> prefix;
  };

  std::size_t vocab_size() const override { return vocab_; }
  StatePtr start() const override { return make({Vocabulary::kBos}); }
  StatePtr advance(const StatePtr& s, TokenId tok) const override {
    auto p = static_cast<const PrefixState&>(*s).prefix;
    p.push_back(tok);
    return make(std::move(p));
  }

  // log p(tokens..., given BOS) accumulated the same way as the searches.
  double sequence_logprob(const std::vector<TokenId>& tokens) const {
    auto s = start();
    double lp = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      lp += s->log_probs[tokens[i]];
      if (i + 1 < tokens.size()) s = advance(s, tokens[i]);
    }
    return lp;
  }

 private:
  StatePtr make(std::vector<TokenId> prefix) const {
    std::uint64_t h = seed_;
    for (TokenId t : prefix) h = h * 1000003u + t + 1;
    Rng rng(h);
    auto st = std::make_shared<PrefixState>();
    st->prefix = std::move(prefix);
    st->log_probs.resize(vocab_);
    double mx = -1e300;
    for (double& x : st->log_probs) {
      x = temperature_ * rng.normal();
      mx = std::max(mx, x);
    }
    double z = 0.0;
    for (double x : st->log_probs) z += std::exp(x - mx);
    for (double& x : st->log_probs) x = x - mx - std::log(z);
    return st;
  }

  std::size_t vocab_;
  std::uint64_t seed_;
  double temperature_;
};

struct Best {
  std::vector<TokenId> tokens;
  double logprob = -INFINITY;
};

// Every EOS-terminated sequence of at most T generated tokens.
inline void enumerate(const RandomLm& lm, std::size_t T, const std::function<void(const std::vector<TokenId>&)>& visit) {
  std::vector<TokenId> seq;
  std::function<void()> rec = [&] {
    if (seq.size() == T) return;
    for (TokenId tok = 0; tok < lm.vocab_size(); ++tok) {
      if (is_banned(tok)) continue;
      seq.push_back(tok);
      if (tok == Vocabulary::kEos) {
        visit(seq);
      } else {
        rec();
      }
      seq.pop_back();
    }
  };
  rec();
}

inline Best exhaustive_best(const RandomLm& lm, std::size_t T, const std::vector<TokenId>& required) {
  Best best;
  enumerate(lm, T, [&](const std::vector<TokenId>& seq) {
    for (TokenId r : required) {
      if (std::find(seq.begin(), seq.end(), r) == seq.end()) return;
    }
    const double lp = lm.sequence_logprob(seq);
    if (lp > best.logprob || (lp == best.logprob && seq < best.tokens)) best = {seq, lp};
  });
  return best;
}

// Beam width at which no hypothesis is ever pruned.
inline std::size_t saturation_width(std::size_t allowed, std::size_t T) {
  std::size_t k = 1;
  for (std::size_t i = 0; i < T; ++i) k *= allowed;
  return k;
}

}  // namespace nocap::testing
