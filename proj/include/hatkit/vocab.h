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

#ifndef HATKIT_VOCAB_H_
#define HATKIT_VOCAB_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hatkit {

// Fixed ids of the special tokens; they occupy the first five vocabulary
// lines in this order.
struct SpecialTokens {
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kCls = 1;
  static constexpr std::int32_t kSep = 2;
  static constexpr std::int32_t kMask = 3;
  static constexpr std::int32_t kUnk = 4;
  static constexpr std::int32_t kCount = 5;

  static bool is_special(std::int32_t id) { return id >= 0 && id < kCount; }
};

// Whitespace + punctuation tokenizer: runs of non-space, non-punctuation
// bytes form words; every ASCII punctuation byte is its own token.
std::vector<std::string> tokenize(std::string_view text);

// Rule-based splitter: a sentence ends after a run of [.!?] followed by
// whitespace or end of text, or at a newline. Sentences are trimmed and
// empty ones dropped.
std::vector<std::string> split_sentences(std::string_view text);

class Vocabulary {
 public:
  // Specials only.
  Vocabulary();

  // Corpus-built vocabulary: tokens ordered by descending frequency, ties
  // broken lexicographically. max_size counts the specials (0 = unlimited).
  static Vocabulary build(const std::vector<std::string>& texts, std::size_t min_count = 1,
                          std::size_t max_size = 0);
  // One token per line; line number = id; the first five lines must be the
  // specials in canonical order.
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  std::int32_t add(const std::string& token);
  std::int32_t id(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  std::size_t size() const { return tokens_.size(); }

  std::vector<std::int32_t> encode(std::string_view text) const;
  std::string decode(const std::vector<std::int32_t>& ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

}  // namespace hatkit

#endif  // HATKIT_VOCAB_H_
