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

#include "hatkit/dataset.h"

#include <filesystem>
#include <fstream>

#include "binary_io.h"
#include "hatkit/error.h"

namespace hatkit {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kFormat = "hatkit.dataset";

}  // namespace

void save_dataset(const std::string& dir, const std::vector<SegmentedDocument>& docs, const json& metadata) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  std::vector<std::int32_t> ids;
  std::string valid;
  json entries = json::array();
  std::size_t K = docs.empty() ? 0 : docs[0].K;
  for (const SegmentedDocument& d : docs) {
    if (d.K != K) throw ContractError("documents disagree on K");
    ids.insert(ids.end(), d.ids.begin(), d.ids.end());
    for (std::uint8_t v : d.valid) valid.push_back(static_cast<char>(v));
    entries.push_back({{"N", d.N},
                       {"label", d.label},
                       {"sentences", d.sentence_count},
                       {"truncated", d.truncated_sentence_count},
                       {"dropped", d.dropped_sentence_count}});
  }
  internal::write_words<std::int32_t>(root / "ids.bin", ids);
  {
    std::ofstream out(root / "valid.bin", std::ios::binary | std::ios::trunc);
    out.write(valid.data(), static_cast<std::streamsize>(valid.size()));
    if (!out) throw IoError("cannot write valid.bin in " + dir);
  }
  const json manifest = {{"format", kFormat}, {"version", 1},           {"K", K},
                         {"positions", ids.size()}, {"metadata", metadata}, {"documents", entries}};
  std::ofstream out(root / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("cannot write manifest in " + dir);
}

LoadedDataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "manifest.json");
  if (!in) throw IoError("no manifest.json in " + dir);
  LoadedDataset out;
  try {
    const json manifest = json::parse(in);
    if (manifest.at("format") != kFormat) throw IoError("not a dataset cache: " + dir);
    const std::size_t K = manifest.at("K").get<std::size_t>();
    const std::size_t positions = manifest.at("positions").get<std::size_t>();
    const auto ids = internal::read_words<std::int32_t>(root / "ids.bin", positions);
    std::ifstream vin(root / "valid.bin", std::ios::binary);
    std::string valid((std::istreambuf_iterator<char>(vin)), std::istreambuf_iterator<char>());
    if (valid.size() != positions) throw IoError("valid.bin size mismatch in " + dir);
    out.metadata = manifest.at("metadata");
    std::size_t offset = 0;
    for (const json& e : manifest.at("documents")) {
      SegmentedDocument d;
      d.K = K;
      d.N = e.at("N").get<std::size_t>();
      d.label = e.at("label").get<int>();
      d.sentence_count = e.at("sentences").get<std::size_t>();
      d.truncated_sentence_count = e.at("truncated").get<std::size_t>();
      d.dropped_sentence_count = e.at("dropped").get<std::size_t>();
      const std::size_t n = d.N * K;
      if (offset + n > positions) throw IoError("dataset manifest overruns ids.bin in " + dir);
      d.ids.assign(ids.begin() + offset, ids.begin() + offset + n);
      for (std::size_t i = 0; i < n; ++i) d.valid.push_back(static_cast<std::uint8_t>(valid[offset + i]));
      offset += n;
      out.docs.push_back(std::move(d));
    }
    if (offset != positions) throw IoError("dataset manifest does not cover ids.bin in " + dir);
  } catch (const json::exception& e) {
    throw IoError("corrupt dataset manifest in " + dir + ": " + e.what());
  }
  return out;
}

}  // namespace hatkit
