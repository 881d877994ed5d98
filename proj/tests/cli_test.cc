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

#include <gtest/gtest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.h"
#include "hatkit/bench.h"
#include "hatkit/error.h"
#include "hatkit/random.h"
#include "hatkit/trainer.h"
#include "json.hpp"
#include "run_config.h"

namespace hatkit::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hatkit_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ::unsetenv("HATKIT_SEED");
  }
  void TearDown() override {
    ::unsetenv("HATKIT_SEED");
    fs::remove_all(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write_hat_config(const std::string& name, const std::string& task = "MLM", std::size_t steps = 12,
                               double lr = 2e-3) {
    const json doc = {{"model", {{"hidden", 16}, {"heads", 2}, {"ffn", 32}, {"K", 16}, {"n_max", 4}, {"layout", "SW,CS,SW,CS"}}},
                      {"task", {{"kind", task}, {"labels", 4}}},
                      {"train", {{"steps", steps}, {"lr", lr}, {"eval_every", 6}, {"seed", 3}}},
                      {"data",
                       {{"synthetic", {{"documents", 80}, {"content_vocab", 40}, {"topics", 4}, {"max_sentences", 4}}},
                        {"dev_documents", 16},
                        {"strategy", "sentence"}}}};
    write(dir_ / name, doc.dump());
    return path(name);
  }

  std::string write_flat_config(const std::string& name) {
    const json doc = {{"model", {{"kind", "flat"}, {"hidden", 16}, {"heads", 2}, {"ffn", 32}, {"max_positions", 16}, {"layers", 2}}},
                      {"task", {{"kind", "MLM"}}},
                      {"train", {{"steps", 8}, {"lr", 2e-3}, {"eval_every", 4}}},
                      {"data",
                       {{"synthetic", {{"documents", 80}, {"content_vocab", 40}, {"topics", 4}, {"max_sentences", 4}}},
                        {"dev_documents", 16},
                        {"strategy", "sentence"},
                        {"K", 16},
                        {"n_max", 4},
                        {"single_segments", true}}}};
    write(dir_ / name, doc.dump());
    return path(name);
  }

  fs::path dir_;
};

TEST(Help, EveryFlagIsDocumented) {
  Options o;
  CLI::App app("hatkit", "hatkit");
  build_app(app, o);
  const std::string top = run_cli({"--help"}).out;
  for (const CLI::App* sub : app.get_subcommands({})) {
    EXPECT_NE(top.find(sub->get_name()), std::string::npos) << sub->get_name();
    const Result r = run_cli({sub->get_name(), "--help"});
    EXPECT_EQ(r.code, 0);
    for (const CLI::Option* opt : sub->get_options()) {
      EXPECT_FALSE(opt->get_description().empty()) << sub->get_name() << " " << opt->get_name();
      const std::string name = opt->get_lnames().empty() ? opt->get_name() : "--" + opt->get_lnames().front();
      EXPECT_NE(r.out.find(name), std::string::npos) << sub->get_name() << " help lacks " << name;
    }
  }
}

TEST(Help, UnknownFlagOrCommandIsAnInputError) {
  EXPECT_EQ(run_cli({"segment", "--bogus"}).code, kExitInput);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kExitInput);
  EXPECT_EQ(run_cli({}).code, kExitInput);
}

TEST_F(CliTest, SegmentEmptyCorpus) {
  write(dir_ / "empty.txt", "");
  const Result r = run_cli({"segment", "--input", path("empty.txt"), "--out", path("seg")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json manifest = json::parse(slurp(dir_ / "seg" / "manifest.json"));
  EXPECT_TRUE(manifest.at("documents").empty());
}

TEST_F(CliTest, SegmentUnreadableInput) {
  EXPECT_EQ(run_cli({"segment", "--input", path("missing.txt"), "--out", path("seg")}).code, kExitInput);
  write(dir_ / "c.txt", "A b.\n");
  EXPECT_EQ(run_cli({"segment", "--input", path("c.txt"), "--out", path("seg"), "--strategy", "zigzag"}).code,
            kExitInput);
}

TEST_F(CliTest, SegmentRerunIsByteIdentical) {
  std::string corpus;
  Rng rng(5);
  for (int d = 0; d < 40; ++d) {
    corpus += "__label__" + std::to_string(d % 3) + " ";
    const std::size_t sentences = 1 + uniform_index(rng, 6);
    for (std::size_t s = 0; s < sentences; ++s) {
      const std::size_t words = 1 + uniform_index(rng, 12);
      for (std::size_t w = 0; w < words; ++w) corpus += "w" + std::to_string(uniform_index(rng, 30)) + " ";
      corpus += ". ";
    }
    corpus += "\n";
  }
  write(dir_ / "c.txt", corpus);
  const std::vector<std::string> args = {"segment", "--input", path("c.txt"), "--out", path("a"), "-K", "8", "-N", "3"};
  ASSERT_EQ(run_cli(args).code, 0);
  std::vector<std::string> again = args;
  again[4] = path("b");
  ASSERT_EQ(run_cli(again).code, 0);
  for (const char* f : {"manifest.json", "ids.bin", "valid.bin", "vocab.txt", "stats.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  const json stats = json::parse(slurp(dir_ / "a" / "stats.json")).at("strategies");
  EXPECT_LE(stats["dynamic"]["pad_fraction"].get<double>(), stats["sentence"]["pad_fraction"].get<double>());
  EXPECT_LE(stats["dynamic"]["truncated_sentences"].get<std::size_t>() + stats["dynamic"]["dropped_sentences"].get<std::size_t>(),
            stats["sentence"]["truncated_sentences"].get<std::size_t>() + stats["sentence"]["dropped_sentences"].get<std::size_t>());
}

TEST_F(CliTest, SegmentedCacheTrains) {
  std::string corpus;
  for (int d = 0; d < 30; ++d) corpus += "__label__" + std::to_string(d % 2) + " alpha beta gamma. delta epsilon.\n";
  write(dir_ / "c.txt", corpus);
  ASSERT_EQ(run_cli({"segment", "--input", path("c.txt"), "--out", path("train"), "-K", "8", "-N", "3"}).code, 0);
  ASSERT_EQ(run_cli({"segment", "--input", path("c.txt"), "--out", path("dev"), "-K", "8", "-N", "3"}).code, 0);
  const json doc = {{"model", {{"hidden", 16}, {"heads", 2}, {"ffn", 32}, {"K", 8}, {"n_max", 3}, {"layout", "I1"}}},
                    {"task", {{"kind", "DTC"}}},
                    {"train", {{"steps", 4}, {"eval_every", 2}}},
                    {"data", {{"train", path("train")}, {"dev", path("dev")}}}};
  write(dir_ / "run.json", doc.dump());
  const Result r = run_cli({"train", "--config", path("run.json"), "--out", path("out")});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, ConfigSchemaViolationsExitTwo) {
  const std::string cfg = write_hat_config("run.json");
  json doc = json::parse(slurp(cfg));
  doc["model"]["colour"] = "blue";
  write(dir_ / "bad1.json", doc.dump());
  EXPECT_EQ(run_cli({"train", "--config", path("bad1.json"), "--out", path("o")}).code, kExitInput);
  doc = json::parse(slurp(cfg));
  doc["train"]["steps"] = "many";
  write(dir_ / "bad2.json", doc.dump());
  EXPECT_EQ(run_cli({"train", "--config", path("bad2.json"), "--out", path("o")}).code, kExitInput);
  doc = json::parse(slurp(cfg));
  doc["extra"] = 1;
  write(dir_ / "bad3.json", doc.dump());
  EXPECT_EQ(run_cli({"train", "--config", path("bad3.json"), "--out", path("o")}).code, kExitInput);
  write(dir_ / "bad4.json", "{not json");
  EXPECT_EQ(run_cli({"train", "--config", path("bad4.json"), "--out", path("o")}).code, kExitInput);
  EXPECT_EQ(run_cli({"train", "--config", path("nothing.json"), "--out", path("o")}).code, kExitInput);
  EXPECT_EQ(run_cli({"train", "--config", cfg}).code, kExitInput);  // no output directory
}

TEST_F(CliTest, RunConfigRejectsUnknownNestedKeys) {
  json doc = json::parse(slurp(write_hat_config("run.json")));
  EXPECT_NO_THROW(parse_run_config(doc));
  doc["data"]["synthetic"]["flavour"] = 1;
  EXPECT_THROW(parse_run_config(doc), ConfigError);
  doc = json::parse(slurp(path("run.json")));
  doc["task"]["kind"] = "XYZ";
  EXPECT_THROW(parse_run_config(doc), ConfigError);
  doc = json::parse(slurp(path("run.json")));
  doc["model"]["kind"] = "flat";
  doc["task"]["kind"] = "DTC";
  EXPECT_THROW(parse_run_config(doc), ConfigError);
}

TEST_F(CliTest, TrainIsDeterministicAndEvalReproducesBestDev) {
  const std::string cfg = write_hat_config("run.json");
  ASSERT_EQ(run_cli({"train", "--config", cfg, "--out", path("a")}).code, 0);
  ASSERT_EQ(run_cli({"train", "--config", cfg, "--out", path("b")}).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "trace.csv"), slurp(dir_ / "b" / "trace.csv"));
  std::ifstream trace(dir_ / "a" / "trace.csv");
  EXPECT_FALSE(read_trace_csv(trace).empty());
  const json summary = json::parse(slurp(dir_ / "a" / "summary.json"));
  const Result ev = run_cli({"eval", "--config", cfg, "--checkpoint", path("a/checkpoint")});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(json::parse(ev.out).at("loss").get<double>(), summary.at("best_dev").at("loss").get<double>());
}

TEST_F(CliTest, SeedPrecedence) {
  const std::string cfg = write_hat_config("run.json", "MLM", 2);
  ASSERT_EQ(run_cli({"train", "--config", cfg, "--out", path("c")}).code, 0);
  EXPECT_EQ(json::parse(slurp(dir_ / "c" / "summary.json")).at("seed"), 3);
  ::setenv("HATKIT_SEED", "11", 1);
  ASSERT_EQ(run_cli({"train", "--config", cfg, "--out", path("e")}).code, 0);
  EXPECT_EQ(json::parse(slurp(dir_ / "e" / "summary.json")).at("seed"), 11);
  ASSERT_EQ(run_cli({"train", "--config", cfg, "--out", path("f"), "--seed", "7"}).code, 0);
  EXPECT_EQ(json::parse(slurp(dir_ / "f" / "summary.json")).at("seed"), 7);
  ::setenv("HATKIT_SEED", "eleven", 1);
  EXPECT_EQ(run_cli({"train", "--config", cfg, "--out", path("g")}).code, kExitInput);
}

TEST_F(CliTest, WarmStartRoundTripsThroughVerification) {
  ASSERT_EQ(run_cli({"train", "--config", write_flat_config("flat.json"), "--out", path("flat")}).code, 0);
  const std::string cfg = write_hat_config("run.json", "SOP", 4);
  const Result r = run_cli({"train", "--config", cfg, "--out", path("hat"), "--warmstart", path("flat/checkpoint"),
                            "--strategy", "S2.2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json ws = json::parse(slurp(dir_ / "hat" / "summary.json")).at("warmstart");
  EXPECT_TRUE(ws.at("ok").get<bool>());
  EXPECT_EQ(ws.at("strategy"), "S2.2");
  EXPECT_GT(ws.at("checked").get<std::size_t>(), 0u);

  ASSERT_EQ(run_cli({"warmstart", "--source", path("flat/checkpoint"), "--strategy", "S2.1", "--config", cfg, "--out",
                     path("ws")})
                .code,
            0);
  EXPECT_TRUE(json::parse(slurp(dir_ / "ws" / "warmstart.json")).at("ok").get<bool>());
  // Two source layers cannot fill the four-layer unpaired mapping.
  EXPECT_EQ(run_cli({"warmstart", "--source", path("flat/checkpoint"), "--strategy", "S2.3", "--config", cfg, "--out",
                     path("ws3")})
                .code,
            kExitInput);
  EXPECT_EQ(run_cli({"train", "--config", cfg, "--out", path("x"), "--strategy", "S2.2"}).code, kExitInput);
}

TEST_F(CliTest, DivergenceExitsThree) {
  json doc = json::parse(slurp(write_hat_config("run.json", "MLM", 6)));
  doc["train"]["lr"] = 1e38;
  doc["train"]["clip_norm"] = 0.0;
  doc["train"]["warmup"] = 0.0;
  write(dir_ / "div.json", doc.dump());
  const Result r = run_cli({"train", "--config", path("div.json"), "--out", path("o")});
  EXPECT_EQ(r.code, kExitRuntime) << r.err;
}

TEST_F(CliTest, BenchAndCompare) {
  const json doc = {
      {"models",
       {{{"id", "lf"}, {"kind", "flat"}, {"attention", "window"}, {"window", 8}, {"hidden", 16}, {"heads", 2},
         {"ffn", 32}, {"vocab", 40}, {"max_positions", 32}, {"layers", 3}},
        {{"id", "hat"}, {"hidden", 16}, {"heads", 2}, {"ffn", 32}, {"vocab", 40}, {"K", 8}, {"n_max", 4}, {"layout", "I1"}}}},
      {"tasks", {"MLM"}},
      {"phases", {"train"}},
      {"bench", {{"N", 4}, {"K", 8}, {"steps", 3}}},
      {"reference", "lf"}};
  write(dir_ / "bench.json", doc.dump());
  const Result r = run_cli({"bench", "--config", path("bench.json"), "--out", path("b")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("reference lf"), std::string::npos);
  const std::vector<BenchReport> reports = reports_from_csv(slurp(dir_ / "b" / "reports.csv"));
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports_to_csv(reports), slurp(dir_ / "b" / "reports.csv"));
  for (const BenchReport& rep : reports) EXPECT_EQ(rep.score_count, rep.measured_score_count);

  // Self comparison.
  write(dir_ / "self.csv", reports_to_csv({reports[0], reports[0]}));
  const Result self = run_cli({"compare", path("self.csv")});
  ASSERT_EQ(self.code, 0) << self.err;
  EXPECT_NE(self.out.find("(0%)"), std::string::npos) << self.out;

  EXPECT_EQ(run_cli({"compare", path("b/reports.json"), "--reference", "nobody"}).code, kExitInput);
  EXPECT_EQ(run_cli({"compare", path("missing.csv")}).code, kExitInput);
  EXPECT_EQ(run_cli({"bench", "--config", path("bench.json"), "--repetitions", "2"}).code, kExitInput);
}

TEST_F(CliTest, ComparePublishedPairings) {
  BenchReport lf, hat;
  lf.model_id = "lf";
  lf.batches_per_second = 1.0 / 0.266;
  lf.peak_memory_bytes = 17'300'000'000;
  lf.repetitions = 3;
  hat = lf;
  hat.model_id = "hat";
  hat.batches_per_second = 1.0 / 0.162;
  hat.peak_memory_bytes = 15'500'000'000;
  write(dir_ / "t8.csv", reports_to_csv({lf, hat}));
  const Result r = run_cli({"compare", path("t8.csv"), "--reference", "lf"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("(+39%)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("(+10%)"), std::string::npos) << r.out;

  hat.phase = BenchPhase::kInfer;
  write(dir_ / "mixed.csv", reports_to_csv({lf, hat}));
  EXPECT_EQ(run_cli({"compare", path("mixed.csv")}).code, kExitInput);
  EXPECT_EQ(run_cli({"compare", path("mixed.csv"), "--phase", "train"}).code, kExitInput);  // one report left
}

}  // namespace
}  // namespace hatkit::cli
