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

#include "nocap/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "nocap/error.hpp"

namespace nocap {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::istringstream is{std::string(text)};
  std::string tok;
  while (is >> tok) out.push_back(to_lower(tok));
  return out;
}

std::string join(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* t : {"<pad>", "<bos>", "<eos>", "<unk>"}) add(t);
}

Vocabulary::Vocabulary(const std::vector<std::string>& words) : Vocabulary() {
  for (const auto& w : words) {
    if (!contains(w)) add(w);
  }
}

void Vocabulary::add(const std::string& token) {
  ids_.emplace(token, tokens_.size());
  tokens_.push_back(token);
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) throw ContractError("unknown token '" + std::string(token) + "'");
  return it->second;
}

TokenId Vocabulary::id_or_unk(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw ContractError("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::vector<TokenId> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id_or_unk(t));
  return out;
}

Tokens Vocabulary::decode(const std::vector<TokenId>& ids) const {
  Tokens out;
  for (TokenId id : ids) {
    if (id == kEos) break;
    if (id == kBos || id == kPad) continue;
    out.push_back(token(id));
  }
  return out;
}

nlohmann::json Vocabulary::to_json() const {
  return {{"tokens", tokens_},
          {"reserved", {{"pad", tokens_[kPad]}, {"bos", tokens_[kBos]}, {"eos", tokens_[kEos]}, {"unk", tokens_[kUnk]}}}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  const auto tokens = j.at("tokens").get<std::vector<std::string>>();
  const auto& r = j.at("reserved");
  if (tokens.size() < kNumReserved || tokens[kPad] != r.at("pad").get<std::string>() ||
      tokens[kBos] != r.at("bos").get<std::string>() || tokens[kEos] != r.at("eos").get<std::string>() ||
      tokens[kUnk] != r.at("unk").get<std::string>()) {
    throw ValidationError("vocabulary reserved tokens must occupy ids 0..3 as pad, bos, eos, unk");
  }
  Vocabulary v;
  v.tokens_.clear();
  v.ids_.clear();
  for (const auto& t : tokens) {
    if (v.contains(t)) throw ValidationError("duplicate vocabulary token '" + t + "'");
    v.add(t);
  }
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << to_json().dump(2) << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  return from_json(nlohmann::json::parse(is));
}

SynonymTable::SynonymTable(std::map<std::string, std::vector<std::string>> forms) {
  for (auto& [word, list] : forms) {
    std::vector<std::string> lowered;
    for (const auto& f : list) lowered.push_back(to_lower(f));
    forms_.emplace(to_lower(word), std::move(lowered));
  }
}

std::vector<std::string> SynonymTable::forms(const std::string& word) const {
  const std::string w = to_lower(word);
  std::vector<std::string> out = {w};
  if (auto it = forms_.find(w); it != forms_.end()) {
    for (const auto& f : it->second) {
      if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    }
  }
  return out;
}

bool SynonymTable::mentioned_in(const Tokens& tokens, const std::string& word) const {
  const auto accepted = forms(word);
  for (const auto& tok : tokens) {
    const std::string t = to_lower(tok);
    if (std::find(accepted.begin(), accepted.end(), t) != accepted.end()) return true;
  }
  return false;
}

nlohmann::json SynonymTable::to_json() const { return nlohmann::json(forms_); }

SynonymTable SynonymTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("synonym table must be a JSON object");
  return SynonymTable(j.get<std::map<std::string, std::vector<std::string>>>());
}

SynonymTable SynonymTable::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  return from_json(nlohmann::json::parse(is));
}

}  // namespace nocap
