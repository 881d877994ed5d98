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

#include "hatkit/synth.h"

#include <numeric>

#include "hatkit/error.h"
#include "hatkit/random.h"

namespace hatkit {
namespace {

constexpr std::int32_t kPeriod = SpecialTokens::kCount;

struct Topic {
  std::vector<std::int32_t> tokens;
  std::vector<std::int32_t> successor;  // indexed by id - kPeriod - 1
};

// Topics partition a random ordering of the content tokens into arcs; each
// arc is closed into a cycle that serves as the topic's successor map.
std::vector<Topic> make_topics(const SynthSpec& spec, Rng& rng) {
  const std::int32_t first = kPeriod + 1;
  std::vector<std::int32_t> all(spec.content_vocab);
  std::iota(all.begin(), all.end(), first);
  for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[uniform_index(rng, i)]);
  std::vector<Topic> topics(spec.topics);
  for (std::size_t t = 0; t < spec.topics; ++t) {
    const std::size_t lo = t * all.size() / spec.topics, hi = (t + 1) * all.size() / spec.topics;
    Topic& topic = topics[t];
    topic.tokens.assign(all.begin() + static_cast<std::ptrdiff_t>(lo), all.begin() + static_cast<std::ptrdiff_t>(hi));
    topic.successor.assign(spec.content_vocab, -1);
    for (std::size_t i = 0; i < topic.tokens.size(); ++i) {
      topic.successor[topic.tokens[i] - first] = topic.tokens[(i + 1) % topic.tokens.size()];
    }
  }
  return topics;
}

std::int32_t pick(const std::vector<std::int32_t>& v, Rng& rng) { return v[uniform_index(rng, v.size())]; }

}  // namespace

void SynthSpec::validate() const {
  if (content_vocab < 4) throw ConfigError("synthetic corpus needs at least 4 content tokens");
  if (topics == 0 || topics * 2 > content_vocab) throw ConfigError("need 1 <= topics <= content_vocab / 2");
  if (min_sentences == 0 || min_sentences > max_sentences) throw ConfigError("bad sentence count range");
  if (min_length < 2 || min_length > max_length) throw ConfigError("bad sentence length range");
  if (copy_mode && max_sentences < 2) throw ConfigError("copy mode needs two sentences");
  if (!(noise >= 0.0 && noise <= 1.0 && copy_noise >= 0.0 && copy_noise <= 1.0)) {
    throw ConfigError("noise rates must lie in [0, 1]");
  }
}

std::vector<SynthDocument> synth_corpus(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng grammar_rng(mix_seed(seed, 1));
  const std::vector<Topic> topics = make_topics(spec, grammar_rng);
  const std::int32_t first = kPeriod + 1;
  std::vector<SynthDocument> docs(spec.documents);
  for (std::size_t d = 0; d < spec.documents; ++d) {
    Rng rng(mix_seed(mix_seed(seed, 2), d));
    SynthDocument& doc = docs[d];
    doc.label = static_cast<int>(uniform_index(rng, spec.topics));
    const Topic& topic = topics[doc.label];
    std::size_t count = spec.min_sentences + uniform_index(rng, spec.max_sentences - spec.min_sentences + 1);
    if (spec.copy_mode) count = std::max<std::size_t>(count, 2);
    for (std::size_t s = 0; s < count; ++s) {
      const std::size_t len = spec.min_length + uniform_index(rng, spec.max_length - spec.min_length + 1);
      std::vector<std::int32_t> sentence;
      std::int32_t tok = pick(topic.tokens, rng);
      for (std::size_t i = 0; i + 1 < len; ++i) {
        sentence.push_back(tok);
        tok = uniform01(rng) < spec.noise ? pick(topic.tokens, rng) : topic.successor[tok - first];
      }
      sentence.push_back(kPeriod);
      doc.sentences.push_back(std::move(sentence));
    }
    if (spec.copy_mode) {
      doc.copy_source = static_cast<int>(uniform_index(rng, count));
      doc.copy_target = static_cast<int>(uniform_index(rng, count - 1));
      if (doc.copy_target >= doc.copy_source) ++doc.copy_target;
      auto copy = doc.sentences[doc.copy_source];
      for (std::size_t i = 0; i + 1 < copy.size(); ++i) {
        if (uniform01(rng) < spec.copy_noise) copy[i] = pick(topic.tokens, rng);
      }
      doc.sentences[doc.copy_target] = std::move(copy);
    }
  }
  return docs;
}

Vocabulary synth_vocabulary(const SynthSpec& spec) {
  Vocabulary v;
  v.add(".");
  for (std::size_t i = 0; i < spec.content_vocab; ++i) v.add("w" + std::to_string(i));
  return v;
}

std::string render_corpus(const std::vector<SynthDocument>& docs, const Vocabulary& vocab) {
  std::string out;
  for (const SynthDocument& doc : docs) {
    if (doc.label >= 0) out += "__label__" + std::to_string(doc.label) + " ";
    bool first = true;
    for (const auto& sentence : doc.sentences) {
      for (std::int32_t id : sentence) {
        if (!first) out += ' ';
        out += vocab.token(id);
        first = false;
      }
    }
    out += '\n';
  }
  return out;
}

std::vector<SegmentedDocument> segment_corpus(const std::vector<SynthDocument>& docs,
                                              SegmentationStrategy strategy, std::size_t K,
                                              std::size_t n_max) {
  std::vector<SegmentedDocument> out;
  out.reserve(docs.size());
  for (const SynthDocument& doc : docs) {
    out.push_back(segment(strategy, doc.sentences, K, n_max));
    out.back().label = doc.label;
  }
  return out;
}

}  // namespace hatkit
