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

#ifndef HATKIT_SEGMENTER_H_
#define HATKIT_SEGMENTER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hatkit/vocab.h"

namespace hatkit {

enum class SegmentationStrategy { kDynamic, kGreedy, kSentenceWise };

SegmentationStrategy parse_strategy(std::string_view name);
std::string_view strategy_name(SegmentationStrategy strategy);

// N x K grid of token ids. Row i is [CLS] followed by up to K-1 payload
// tokens and then [PAD]s; valid marks exactly the non-pad positions.
struct SegmentedDocument {
  std::size_t K = 0;
  std::size_t N = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> valid;
  // Sentence indices [first, last) contributing to each segment.
  std::vector<std::pair<std::size_t, std::size_t>> sentence_range;
  std::size_t sentence_count = 0;
  // Sentences cut short (over-long for a segment, or split off by the
  // segment budget).
  std::size_t truncated_sentence_count = 0;
  // Sentences with no token retained because the document hit N_max.
  std::size_t dropped_sentence_count = 0;
  int label = -1;

  std::span<const std::int32_t> segment(std::size_t i) const { return {ids.data() + i * K, K}; }
  std::size_t payload_length(std::size_t i) const;
  std::size_t pad_count() const;
  double pad_fraction() const;
  bool document_truncated() const { return dropped_sentence_count > 0; }
  std::size_t sentences_not_fully_retained() const {
    return truncated_sentence_count + dropped_sentence_count;
  }
};

// Each operates on already-tokenized sentences. K >= 2 and N_max >= 1, else
// ConfigError.
//
// Dynamic: first-fit in order; a sentence joins the current segment if it
// fits the remaining K-1 payload capacity, otherwise it opens a new segment.
// Sentences longer than K-1 are truncated to K-1.
SegmentedDocument segment_dynamic(const std::vector<std::vector<std::int32_t>>& sentences,
                                  std::size_t K, std::size_t n_max);
// Greedy: the token stream is packed K-1 per segment ignoring boundaries.
SegmentedDocument segment_greedy(const std::vector<std::vector<std::int32_t>>& sentences,
                                 std::size_t K, std::size_t n_max);
// One sentence per segment.
SegmentedDocument segment_sentencewise(const std::vector<std::vector<std::int32_t>>& sentences,
                                       std::size_t K, std::size_t n_max);

SegmentedDocument segment(SegmentationStrategy strategy,
                          const std::vector<std::vector<std::int32_t>>& sentences, std::size_t K,
                          std::size_t n_max);
// Text front end: split_sentences + vocabulary encoding.
SegmentedDocument segment_text(SegmentationStrategy strategy, std::string_view text,
                               const Vocabulary& vocab, std::size_t K, std::size_t n_max);

// Corpus files are UTF-8 text, one document per line, or blank-line
// separated when the file contains any blank line. A document may start
// with "__label__<int> " to carry a class label.
struct RawDocument {
  std::string text;
  int label = -1;
};
std::vector<RawDocument> read_corpus(const std::string& path);
std::vector<RawDocument> parse_corpus(std::string_view content);

}  // namespace hatkit

#endif  // HATKIT_SEGMENTER_H_
