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

#include "hatkit/segmenter.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hatkit/error.h"

namespace hatkit {
namespace {

using Sentences = std::vector<std::vector<std::int32_t>>;

struct Builder {
  std::size_t K;
  std::vector<std::vector<std::int32_t>> payloads;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;

  void open(std::size_t sentence) {
    payloads.emplace_back();
    ranges.emplace_back(sentence, sentence + 1);
  }
  void append(std::size_t sentence, std::span<const std::int32_t> tokens) {
    payloads.back().insert(payloads.back().end(), tokens.begin(), tokens.end());
    ranges.back().second = sentence + 1;
  }

  SegmentedDocument finish(std::size_t sentence_count) const {
    SegmentedDocument doc;
    doc.K = K;
    doc.N = payloads.size();
    doc.sentence_count = sentence_count;
    doc.ids.assign(doc.N * K, SpecialTokens::kPad);
    doc.valid.assign(doc.N * K, 0);
    doc.sentence_range = ranges;
    for (std::size_t i = 0; i < doc.N; ++i) {
      doc.ids[i * K] = SpecialTokens::kCls;
      doc.valid[i * K] = 1;
      for (std::size_t j = 0; j < payloads[i].size(); ++j) {
        doc.ids[i * K + 1 + j] = payloads[i][j];
        doc.valid[i * K + 1 + j] = 1;
      }
    }
    return doc;
  }
};

void check_config(std::size_t K, std::size_t n_max) {
  if (K < 2) throw ConfigError("segment length K must be >= 2, got " + std::to_string(K));
  if (n_max < 1) throw ConfigError("N_max must be >= 1");
}

std::size_t count_nonempty(const Sentences& sentences, std::size_t from) {
  std::size_t n = 0;
  for (std::size_t i = from; i < sentences.size(); ++i) n += sentences[i].empty() ? 0 : 1;
  return n;
}

}  // namespace

SegmentationStrategy parse_strategy(std::string_view name) {
  if (name == "dynamic") return SegmentationStrategy::kDynamic;
  if (name == "greedy") return SegmentationStrategy::kGreedy;
  if (name == "sentence" || name == "sentencewise" || name == "sentence-wise") {
    return SegmentationStrategy::kSentenceWise;
  }
  throw ConfigError("unknown segmentation strategy: " + std::string(name));
}

std::string_view strategy_name(SegmentationStrategy strategy) {
  switch (strategy) {
    case SegmentationStrategy::kDynamic:
      return "dynamic";
    case SegmentationStrategy::kGreedy:
      return "greedy";
    case SegmentationStrategy::kSentenceWise:
      return "sentence";
  }
  return "unknown";
}

std::size_t SegmentedDocument::payload_length(std::size_t i) const {
  std::size_t n = 0;
  for (std::size_t j = 1; j < K; ++j) n += valid[i * K + j];
  return n;
}

std::size_t SegmentedDocument::pad_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 0));
}

double SegmentedDocument::pad_fraction() const {
  return ids.empty() ? 0.0 : static_cast<double>(pad_count()) / static_cast<double>(ids.size());
}

SegmentedDocument segment_dynamic(const Sentences& sentences, std::size_t K, std::size_t n_max) {
  check_config(K, n_max);
  const std::size_t cap = K - 1;
  Builder b{K, {}, {}};
  std::size_t truncated = 0, dropped = 0;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (sentences[s].empty()) continue;
    const bool too_long = sentences[s].size() > cap;
    const std::span<const std::int32_t> tokens(sentences[s].data(), std::min(sentences[s].size(), cap));
    if (!b.payloads.empty() && b.payloads.back().size() + tokens.size() <= cap) {
      b.append(s, tokens);
    } else {
      if (b.payloads.size() == n_max) {
        dropped = count_nonempty(sentences, s);
        break;
      }
      b.open(s);
      b.append(s, tokens);
    }
    truncated += too_long ? 1 : 0;
  }
  SegmentedDocument doc = b.finish(sentences.size());
  doc.truncated_sentence_count = truncated;
  doc.dropped_sentence_count = dropped;
  return doc;
}

SegmentedDocument segment_greedy(const Sentences& sentences, std::size_t K, std::size_t n_max) {
  check_config(K, n_max);
  const std::size_t cap = K - 1;
  Builder b{K, {}, {}};
  std::size_t truncated = 0, dropped = 0;
  bool full = false;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& sent = sentences[s];
    if (sent.empty()) continue;
    if (full) {
      ++dropped;
      continue;
    }
    std::size_t pos = 0;
    while (pos < sent.size()) {
      if (b.payloads.empty() || b.payloads.back().size() == cap) {
        if (b.payloads.size() == n_max) {
          full = true;
          break;
        }
        b.open(s);
      }
      const std::size_t take = std::min(cap - b.payloads.back().size(), sent.size() - pos);
      b.append(s, std::span<const std::int32_t>(sent.data() + pos, take));
      pos += take;
    }
    if (full) {
      if (pos == 0) {
        ++dropped;
      } else {
        ++truncated;
      }
    }
  }
  SegmentedDocument doc = b.finish(sentences.size());
  doc.truncated_sentence_count = truncated;
  doc.dropped_sentence_count = dropped;
  return doc;
}

SegmentedDocument segment_sentencewise(const Sentences& sentences, std::size_t K, std::size_t n_max) {
  check_config(K, n_max);
  const std::size_t cap = K - 1;
  Builder b{K, {}, {}};
  std::size_t truncated = 0, dropped = 0;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (sentences[s].empty()) continue;
    if (b.payloads.size() == n_max) {
      dropped = count_nonempty(sentences, s);
      break;
    }
    b.open(s);
    b.append(s, std::span<const std::int32_t>(sentences[s].data(), std::min(sentences[s].size(), cap)));
    truncated += sentences[s].size() > cap ? 1 : 0;
  }
  SegmentedDocument doc = b.finish(sentences.size());
  doc.truncated_sentence_count = truncated;
  doc.dropped_sentence_count = dropped;
  return doc;
}

SegmentedDocument segment(SegmentationStrategy strategy, const Sentences& sentences, std::size_t K,
                          std::size_t n_max) {
  switch (strategy) {
    case SegmentationStrategy::kDynamic:
      return segment_dynamic(sentences, K, n_max);
    case SegmentationStrategy::kGreedy:
      return segment_greedy(sentences, K, n_max);
    case SegmentationStrategy::kSentenceWise:
      return segment_sentencewise(sentences, K, n_max);
  }
  throw ConfigError("unknown segmentation strategy");
}

SegmentedDocument segment_text(SegmentationStrategy strategy, std::string_view text, const Vocabulary& vocab,
                               std::size_t K, std::size_t n_max) {
  Sentences sentences;
  for (const std::string& s : split_sentences(text)) sentences.push_back(vocab.encode(s));
  return segment(strategy, sentences, K, n_max);
}

std::vector<RawDocument> parse_corpus(std::string_view content) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(content)};
  std::string line;
  bool blank_separated = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) blank_separated = true;
    lines.push_back(line);
  }
  std::vector<std::string> texts;
  if (blank_separated) {
    std::string current;
    for (const std::string& l : lines) {
      if (l.find_first_not_of(" \t") == std::string::npos) {
        if (!current.empty()) texts.push_back(std::move(current));
        current.clear();
      } else {
        if (!current.empty()) current.push_back('\n');
        current += l;
      }
    }
    if (!current.empty()) texts.push_back(std::move(current));
  } else {
    texts = std::move(lines);
  }
  std::vector<RawDocument> docs;
  for (std::string& t : texts) {
    RawDocument d;
    static constexpr std::string_view kPrefix = "__label__";
    if (t.rfind(kPrefix, 0) == 0) {
      const std::size_t end = t.find_first_of(" \t\n", kPrefix.size());
      const std::string number = t.substr(kPrefix.size(), end - kPrefix.size());
      try {
        d.label = std::stoi(number);
      } catch (const std::exception&) {
        throw ConfigError("bad document label: " + number);
      }
      t = end == std::string::npos ? std::string() : t.substr(end + 1);
    }
    d.text = std::move(t);
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<RawDocument> read_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read corpus " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

}  // namespace hatkit
