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

#include "hatkit/checkpoint.h"

#include <filesystem>
#include <fstream>

#include "hatkit/error.h"
#include "binary_io.h"

namespace hatkit {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kFormat = "hatkit.checkpoint";
constexpr int kVersion = 1;

void write_tensor(const fs::path& path, const Tensor& t) { internal::write_words(path, t.values()); }

Tensor read_tensor(const fs::path& path, const Shape& shape) {
  const auto values = internal::read_words<float>(path, shape_size(shape));
  return Tensor(shape, values);
}

template <typename T>
T get(const json& doc, const char* key, T fallback, const std::string& where) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

void reject_unknown_keys(const json& doc, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key " + where + "." + key);
  }
}

json to_json(const HatConfig& c) {
  return {{"hidden", c.hidden}, {"heads", c.heads},   {"ffn", c.ffn},         {"vocab", c.vocab},
          {"K", c.K},           {"n_max", c.n_max},   {"layout", layout_string(c.layout)},
          {"dropout", c.dropout}, {"tie_mlm", c.tie_mlm}};
}

json to_json(const FlatConfig& c) {
  return {{"hidden", c.hidden}, {"heads", c.heads},   {"ffn", c.ffn},
          {"vocab", c.vocab},   {"max_positions", c.max_positions},
          {"layers", c.layers}, {"dropout", c.dropout}, {"tie_mlm", c.tie_mlm}};
}

HatConfig hat_config_from_json(const json& doc) {
  const std::string where = "model";
  reject_unknown_keys(doc, {"hidden", "heads", "ffn", "vocab", "K", "n_max", "layout", "dropout", "tie_mlm"}, where);
  HatConfig c;
  c.hidden = get(doc, "hidden", c.hidden, where);
  c.heads = get(doc, "heads", c.heads, where);
  c.ffn = get(doc, "ffn", c.ffn, where);
  c.vocab = get(doc, "vocab", c.vocab, where);
  c.K = get(doc, "K", c.K, where);
  c.n_max = get(doc, "n_max", c.n_max, where);
  c.layout = parse_layout(get<std::string>(doc, "layout", "I1", where));
  c.dropout = get(doc, "dropout", c.dropout, where);
  c.tie_mlm = get(doc, "tie_mlm", c.tie_mlm, where);
  c.validate();
  return c;
}

FlatConfig flat_config_from_json(const json& doc) {
  const std::string where = "model";
  reject_unknown_keys(doc, {"hidden", "heads", "ffn", "vocab", "max_positions", "layers", "dropout", "tie_mlm"},
                      where);
  FlatConfig c;
  c.hidden = get(doc, "hidden", c.hidden, where);
  c.heads = get(doc, "heads", c.heads, where);
  c.ffn = get(doc, "ffn", c.ffn, where);
  c.vocab = get(doc, "vocab", c.vocab, where);
  c.max_positions = get(doc, "max_positions", c.max_positions, where);
  c.layers = get(doc, "layers", c.layers, where);
  c.dropout = get(doc, "dropout", c.dropout, where);
  c.tie_mlm = get(doc, "tie_mlm", c.tie_mlm, where);
  c.validate();
  return c;
}

void save_checkpoint(const std::string& dir, const Checkpoint& checkpoint) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  json tensors = json::array();
  for (const std::string& name : checkpoint.params.names()) {
    const auto& entry = checkpoint.params.entry(name);
    const std::string file = name + ".bin";
    write_tensor(root / file, entry.value);
    tensors.push_back({{"name", name},
                       {"shape", entry.value.shape()},
                       {"dtype", "float32"},
                       {"file", file},
                       {"trainable", entry.trainable}});
  }
  const json manifest = {{"format", kFormat},
                         {"version", kVersion},
                         {"model", checkpoint.model},
                         {"config", checkpoint.config},
                         {"tensors", tensors}};
  std::ofstream out(root / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("cannot write manifest in " + dir);
}

Checkpoint load_checkpoint(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "manifest.json");
  if (!in) throw IoError("no manifest.json in " + dir);
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest in " + dir + ": " + e.what());
  }
  if (manifest.value("format", "") != kFormat || manifest.value("version", 0) != kVersion) {
    throw IoError("unsupported checkpoint format in " + dir);
  }
  Checkpoint out;
  try {
    out.model = manifest.at("model").get<std::string>();
    out.config = manifest.at("config");
    for (const json& t : manifest.at("tensors")) {
      if (t.at("dtype").get<std::string>() != "float32") throw IoError("unsupported dtype in " + dir);
      const Shape shape = t.at("shape").get<Shape>();
      out.params.add(t.at("name").get<std::string>(), read_tensor(root / t.at("file").get<std::string>(), shape),
                     t.value("trainable", true));
    }
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest in " + dir + ": " + e.what());
  }
  return out;
}

}  // namespace hatkit
