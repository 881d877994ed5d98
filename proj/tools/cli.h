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

#ifndef HATKIT_TOOLS_CLI_H_
#define HATKIT_TOOLS_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace hatkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitRuntime = 3;

struct Options {
  // segment
  std::string input;
  std::string strategy = "dynamic";
  std::size_t K = 128;
  std::size_t n_max = 8;
  std::string vocab;
  std::size_t vocab_size = 0;
  std::size_t min_count = 1;
  // shared
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  // train
  std::string warmstart;
  std::string warmstart_strategy;
  std::optional<std::size_t> steps;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  // eval
  std::string checkpoint;
  std::string split = "dev";
  // warmstart
  std::string source;
  // bench / compare
  std::string reference;
  std::optional<std::size_t> repetitions;
  std::vector<std::string> reports;
  std::string task;
  std::string phase;
};

// Declares every subcommand and flag on `app`.
void build_app(CLI::App& app, Options& options);

// Parses and runs one command line (args exclude the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hatkit::cli

#endif  // HATKIT_TOOLS_CLI_H_
