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

#ifndef HATKIT_SYNTH_H_
#define HATKIT_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hatkit/segmenter.h"
#include "hatkit/vocab.h"

namespace hatkit {

// Synthetic documents from a per-topic token grammar. The topics partition
// the content vocabulary, each with a cyclic successor map on its tokens; a
// sentence starts at a random topic token and follows the successor map, leaving it with
// probability `noise`. Sentences end with the "." token. In copy mode one
// sentence is a near-copy of another sentence of the same document (each
// token resampled with probability copy_noise).
struct SynthSpec {
  std::size_t documents = 2000;
  std::size_t content_vocab = 100;
  std::size_t topics = 8;
  std::size_t min_sentences = 2;
  std::size_t max_sentences = 8;
  // Sentence length including the final ".".
  std::size_t min_length = 8;
  std::size_t max_length = 15;
  double noise = 0.1;
  bool copy_mode = false;
  double copy_noise = 0.05;

  // Total vocabulary: specials, ".", and the content tokens.
  std::size_t vocab_size() const { return SpecialTokens::kCount + 1 + content_vocab; }
  // Throws ConfigError.
  void validate() const;
};

struct SynthDocument {
  std::vector<std::vector<std::int32_t>> sentences;
  int label = -1;
  // Copy mode: sentence copy_target is a near-copy of copy_source.
  int copy_source = -1;
  int copy_target = -1;
};

// Deterministic given (spec, seed).
std::vector<SynthDocument> synth_corpus(const SynthSpec& spec, std::uint64_t seed);
// Specials, ".", then "w0".."w<content_vocab - 1>".
Vocabulary synth_vocabulary(const SynthSpec& spec);
// One line per document: "__label__<topic> " then the sentences' tokens.
std::string render_corpus(const std::vector<SynthDocument>& docs, const Vocabulary& vocab);
// Segments every document with the given strategy and copies its label.
std::vector<SegmentedDocument> segment_corpus(const std::vector<SynthDocument>& docs,
                                              SegmentationStrategy strategy, std::size_t K,
                                              std::size_t n_max);

}  // namespace hatkit

#endif  // HATKIT_SYNTH_H_
