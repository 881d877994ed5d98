/* Copyright 2026 The hatkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "hatkit/vocab.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "hatkit/error.h"

namespace hatkit {
namespace {

constexpr const char* kSpecialNames[] = {"[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (char c : text) {
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      word.push_back(c);
    }
  }
  flush();
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    const std::string_view piece = trim(text.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
    start = end;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') {
      emit(i + 1);
    } else if (is_terminal(text[i])) {
      std::size_t j = i;
      while (j + 1 < text.size() && is_terminal(text[j + 1])) ++j;
      if (j + 1 == text.size() || is_space(text[j + 1])) {
        emit(j + 1);
        i = j;
      }
    }
  }
  emit(text.size());
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* name : kSpecialNames) add(name);
}

std::int32_t Vocabulary::add(const std::string& token) {
  if (auto it = index_.find(token); it != index_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t min_count,
                             std::size_t max_size) {
  std::map<std::string, std::size_t> counts;
  for (const std::string& text : texts) {
    for (std::string& tok : tokenize(text)) ++counts[std::move(tok)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (const auto& [tok, n] : ranked) {
    if (n < min_count) break;
    if (max_size && vocab.size() >= max_size) break;
    vocab.add(tok);
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocabulary " + path);
  Vocabulary vocab;
  vocab.tokens_.clear();
  vocab.index_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (vocab.index_.count(line)) throw ConfigError("duplicate vocabulary entry: " + line);
    vocab.add(line);
  }
  if (vocab.size() < static_cast<std::size_t>(SpecialTokens::kCount)) {
    throw ConfigError("vocabulary " + path + " lacks the special tokens");
  }
  for (std::int32_t i = 0; i < SpecialTokens::kCount; ++i) {
    if (vocab.tokens_[i] != kSpecialNames[i]) {
      throw ConfigError("vocabulary line " + std::to_string(i + 1) + " must be " + kSpecialNames[i]);
    }
  }
  return vocab;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path);
  for (const std::string& tok : tokens_) out << tok << '\n';
}

std::int32_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? SpecialTokens::kUnk : it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw LookupError("token id out of range: " + std::to_string(id));
  }
  return tokens_[id];
}

std::vector<std::int32_t> Vocabulary::encode(std::string_view text) const {
  std::vector<std::int32_t> ids;
  for (const std::string& tok : tokenize(text)) ids.push_back(id(tok));
  return ids;
}

std::string Vocabulary::decode(const std::vector<std::int32_t>& ids) const {
  std::string out;
  for (std::int32_t id : ids) {
    if (!out.empty()) out.push_back(' ');
    out += token(id);
  }
  return out;
}

}  // namespace hatkit
