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
#include <memory>
#include <span>
#include <vector>

#include "nocap/text.hpp"

namespace nocap::decoder {

// Next-token distributions for incremental decoding. A state stands for a
// prefix that starts with BOS; states are immutable and may be shared between
// hypotheses.
class LanguageModel {
 public:
  struct State {
    virtual ~State() = default;
    std::vector<double> log_probs;  // log p(next token | prefix), one per id
  };
  using StatePtr = std::shared_ptr<const State>;

  virtual ~LanguageModel() = default;
  virtual std::size_t vocab_size() const = 0;
  // State after BOS.
  virtual StatePtr start() const = 0;
  virtual StatePtr advance(const StatePtr& state, TokenId token) const = 0;
};

}  // namespace nocap::decoder
