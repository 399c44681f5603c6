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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace nocap {

using TokenId = std::size_t;
using Tokens = std::vector<std::string>;

// Lowercases and splits on whitespace.
Tokens tokenize(std::string_view text);
std::string join(const Tokens& tokens);

// Bidirectional token <-> id map. Ids 0..3 are reserved for PAD, BOS, EOS and
// UNK, in that order.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kNumReserved = 4;

  Vocabulary();
  // Adds the non-reserved words in order, skipping duplicates.
  explicit Vocabulary(const std::vector<std::string>& words);

  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;
  // Throws ContractError for unknown tokens.
  TokenId id(std::string_view token) const;
  TokenId id_or_unk(std::string_view token) const;
  const std::string& token(TokenId id) const;
  static bool is_reserved(TokenId id) { return id < kNumReserved; }

  std::vector<TokenId> encode(const Tokens& tokens) const;
  // Drops BOS/PAD and stops at EOS.
  Tokens decode(const std::vector<TokenId>& ids) const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  void add(const std::string& token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Class word -> accepted surface forms (plurals, synonyms). A word missing
// from the table is its own singleton entry.
class SynonymTable {
 public:
  SynonymTable() = default;
  explicit SynonymTable(std::map<std::string, std::vector<std::string>> forms);

  // The word itself followed by its listed forms, all lowercase.
  std::vector<std::string> forms(const std::string& word) const;
  bool contains(const std::string& word) const { return forms_.count(word) != 0; }
  // True when any token equals the word or one of its forms (case-insensitive).
  bool mentioned_in(const Tokens& tokens, const std::string& word) const;
  const std::map<std::string, std::vector<std::string>>& entries() const { return forms_; }

  nlohmann::json to_json() const;
  static SynonymTable from_json(const nlohmann::json& j);
  static SynonymTable load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::vector<std::string>> forms_;
};

std::string to_lower(std::string_view s);

}  // namespace nocap
