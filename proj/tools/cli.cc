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

#include "cli.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "hatkit/bench.h"
#include "hatkit/checkpoint.h"
#include "hatkit/dataset.h"
#include "hatkit/error.h"
#include "hatkit/random.h"
#include "hatkit/segmenter.h"
#include "hatkit/vocab.h"
#include "hatkit/warmstart.h"
#include "run_config.h"

namespace hatkit::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr std::uint64_t kHeadStream = 0x4ead;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

json metrics_json(TaskKind kind, const Metrics& m) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"loss", num(m.loss)},
          {"mae", num(m.mae)},
          {"accuracy", num(m.accuracy)},
          {"micro_f1", num(m.micro_f1)},
          {"count", m.count},
          {"primary", primary_metric_name(kind)},
          {"primary_value", num(primary_metric(kind, m))}};
}

// Per-strategy segmentation statistics over a corpus.
json segmentation_stats(const std::vector<SegmentedDocument>& docs) {
  std::size_t segments = 0, pads = 0, positions = 0, truncated = 0, dropped = 0, truncated_docs = 0, sentences = 0;
  for (const SegmentedDocument& d : docs) {
    segments += d.N;
    pads += d.pad_count();
    positions += d.N * d.K;
    truncated += d.truncated_sentence_count;
    dropped += d.dropped_sentence_count;
    truncated_docs += d.document_truncated() ? 1 : 0;
    sentences += d.sentence_count;
  }
  return {{"documents", docs.size()},
          {"segments", segments},
          {"sentences", sentences},
          {"pad_fraction", positions ? double(pads) / double(positions) : 0.0},
          {"truncated_sentences", truncated},
          {"dropped_sentences", dropped},
          {"truncated_documents", truncated_docs}};
}

int cmd_segment(const Options& o, std::ostream& out) {
  const SegmentationStrategy chosen = parse_strategy(o.strategy);
  if (o.K < 2 || o.n_max < 1) throw ConfigError("segment length must be at least 2 and max segments at least 1");
  const std::vector<RawDocument> corpus = read_corpus(o.input);
  Vocabulary vocab;
  if (!o.vocab.empty()) {
    vocab = Vocabulary::load(o.vocab);
  } else {
    std::vector<std::string> texts;
    for (const RawDocument& d : corpus) texts.push_back(d.text);
    vocab = Vocabulary::build(texts, o.min_count, o.vocab_size);
  }
  const fs::path dir(o.out);
  make_dir(dir);
  json stats = json::object();
  std::vector<SegmentedDocument> cache;
  for (SegmentationStrategy s :
       {SegmentationStrategy::kDynamic, SegmentationStrategy::kGreedy, SegmentationStrategy::kSentenceWise}) {
    std::vector<SegmentedDocument> docs;
    docs.reserve(corpus.size());
    for (const RawDocument& raw : corpus) {
      docs.push_back(segment_text(s, raw.text, vocab, o.K, o.n_max));
      docs.back().label = raw.label;
    }
    stats[std::string(strategy_name(s))] = segmentation_stats(docs);
    if (s == chosen) cache = std::move(docs);
  }
  save_dataset(o.out, cache,
               {{"strategy", strategy_name(chosen)}, {"K", o.K}, {"n_max", o.n_max}, {"vocab_size", vocab.size()}});
  vocab.save((dir / "vocab.txt").string());
  const json summary = {{"strategy", strategy_name(chosen)}, {"K", o.K}, {"n_max", o.n_max}, {"strategies", stats}};
  write_text(dir / "stats.json", summary.dump(2) + "\n");

  out << "segmented " << corpus.size() << " documents (" << strategy_name(chosen) << ", K=" << o.K
      << ", N_max=" << o.n_max << ", vocabulary " << vocab.size() << ") into " << o.out << "\n";
  out << std::left << std::setw(14) << "strategy" << std::right << std::setw(10) << "segments" << std::setw(10)
      << "pad" << std::setw(12) << "truncated" << std::setw(10) << "dropped" << "\n";
  for (const auto& [name, s] : stats.items()) {
    out << std::left << std::setw(14) << name << std::right << std::setw(10) << s["segments"].get<std::size_t>()
        << std::setw(10) << std::fixed << std::setprecision(4) << s["pad_fraction"].get<double>() << std::setw(12)
        << s["truncated_sentences"].get<std::size_t>() << std::setw(10) << s["dropped_sentences"].get<std::size_t>()
        << "\n";
  }
  return kExitOk;
}

RunConfig run_config_with_flags(const Options& o) {
  RunConfig cfg = load_run_config(o.config);
  if (o.steps) cfg.train.steps = *o.steps;
  if (o.lr) cfg.train.lr = *o.lr;
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  cfg.train.seed = resolve_seed(cfg.train.seed, o.seed);
  if (!o.out.empty()) cfg.out = o.out;
  cfg.train.validate();
  return cfg;
}

TaskModel task_model(const RunConfig& cfg) {
  return cfg.model.flat ? flat_mlm_model(cfg.model.flat_config, cfg.model.attention)
                        : hat_task_model(cfg.model.hat, cfg.task);
}

ParamStore warm_start(const Options& o, const HatConfig& target, std::uint64_t seed, std::ostream& out,
                      json* report_out) {
  const WarmStartStrategy strategy = parse_warmstart(o.warmstart_strategy);
  const Checkpoint source = load_checkpoint(o.warmstart.empty() ? o.source : o.warmstart);
  if (source.model != "flat") throw ConfigError("warm-start source must be a flat checkpoint");
  const FlatConfig source_config = flat_config_from_json(source.config);
  const MappingPlan plan = plan_warmstart(strategy, source_config, target);
  ParamStore params = apply_plan(plan, source.params, target, seed);
  const VerifyReport report = verify_plan(plan, source.params, params);
  out << "warm-start " << warmstart_name(strategy) << ": " << plan.directives.size() << " tensors copied, "
      << report.checked << " verified, " << report.unfilled.size() << " freshly initialised\n";
  if (report_out) {
    *report_out = {{"strategy", warmstart_name(strategy)},
                   {"directives", plan.directives.size()},
                   {"checked", report.checked},
                   {"failures", report.failures},
                   {"unfilled", report.unfilled},
                   {"ok", report.ok()}};
  }
  if (!report.ok()) {
    throw MappingError("warm-start verification failed: " + report.failures.front());
  }
  return params;
}

int cmd_train(const Options& o, std::ostream& out) {
  RunConfig cfg = run_config_with_flags(o);
  if (cfg.out.empty()) throw ConfigError("no output directory: set out in the config or pass --out");
  if (o.warmstart.empty() != o.warmstart_strategy.empty()) {
    throw ConfigError("--warmstart and --strategy go together");
  }
  RunData data = load_run_data(cfg);
  const std::uint64_t seed = cfg.train.seed;
  json warm_report;
  ParamStore params;
  if (!o.warmstart.empty()) {
    if (cfg.model.flat) throw ConfigError("warm-starting needs a HAT model");
    params = warm_start(o, cfg.model.hat, seed, out, &warm_report);
  } else {
    params = cfg.model.flat ? init_flat(cfg.model.flat_config, seed) : init_hat(cfg.model.hat, seed);
  }
  Rng rng(mix_seed(seed, kHeadStream));
  add_task_head(params, cfg.task, cfg.model.hidden(), rng);

  const TrainResult result =
      train(std::move(params), task_model(cfg), cfg.task, data.train, data.dev, cfg.model.vocab(), data.n_max, cfg.train);

  const fs::path dir(cfg.out);
  make_dir(dir);
  Checkpoint ckpt;
  ckpt.model = cfg.model.flat ? "flat" : "hat";
  ckpt.config = cfg.model.flat ? to_json(cfg.model.flat_config) : to_json(cfg.model.hat);
  ckpt.params = result.params;
  save_checkpoint((dir / "checkpoint").string(), ckpt);
  std::ostringstream trace;
  write_trace_csv(trace, result.trace);
  write_text(dir / "trace.csv", trace.str());
  json effective = {{"model", cfg.model.to_json()}, {"task", to_json(cfg.task)}, {"train", to_json(cfg.train)}};
  write_text(dir / "run.json", effective.dump(2) + "\n");
  json summary = {{"task", task_name(cfg.task.kind)},
                  {"metric", primary_metric_name(cfg.task.kind)},
                  {"initial_dev", metrics_json(cfg.task.kind, result.initial_dev)},
                  {"best_dev", metrics_json(cfg.task.kind, result.best_dev)},
                  {"final_dev", metrics_json(cfg.task.kind, result.final_dev)},
                  {"best_step", result.best_step},
                  {"steps_run", result.steps_run},
                  {"stopped_early", result.stopped_early},
                  {"seed", seed}};
  if (!warm_report.is_null()) summary["warmstart"] = warm_report;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  const std::string metric(primary_metric_name(cfg.task.kind));
  out << "trained " << result.steps_run << " steps; dev " << metric << " "
      << primary_metric(cfg.task.kind, result.initial_dev) << " -> " << primary_metric(cfg.task.kind, result.best_dev)
      << " (best at step " << result.best_step << "); wrote " << cfg.out << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  RunConfig cfg = run_config_with_flags(o);
  if (o.split != "dev" && o.split != "train") throw ConfigError("--split must be dev or train");
  RunData data = load_run_data(cfg);
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  if (ckpt.model != (cfg.model.flat ? "flat" : "hat")) throw ConfigError("checkpoint and config model kinds differ");
  const bool dev = o.split == "dev";
  const SegmentPool pool(data.train);
  const std::vector<TaskExample> examples =
      build_examples(cfg.task, dev ? data.dev : data.train, pool, cfg.model.vocab(), data.n_max, cfg.train.seed,
                     dev ? data.train.size() : 0);
  const Metrics m = evaluate(ckpt.params, task_model(cfg), cfg.task, examples, cfg.train.eval_batch_size);
  json report = metrics_json(cfg.task.kind, m);
  report["split"] = o.split;
  report["task"] = task_name(cfg.task.kind);
  if (!o.out.empty()) write_text(o.out, report.dump(2) + "\n");
  out << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_warmstart(const Options& o, std::ostream& out) {
  const json doc = read_json_file(o.config);
  if (!doc.is_object() || !doc.contains("model")) throw ConfigError("config has no model section");
  ModelSection model = parse_model_section(doc.at("model"));
  if (model.flat) throw ConfigError("warm-start target must be a HAT model");
  if (!model.vocab_given) {
    const Checkpoint source = load_checkpoint(o.source);
    model.set_vocab(flat_config_from_json(source.config).vocab);
  }
  std::uint64_t config_seed = 0;
  if (doc.contains("train") && doc.at("train").contains("seed")) config_seed = parse_train_section(doc.at("train")).seed;
  const std::uint64_t seed = resolve_seed(config_seed, o.seed);
  json report;
  Checkpoint target;
  target.model = "hat";
  target.config = to_json(model.hat);
  target.params = warm_start(o, model.hat, seed, out, &report);
  save_checkpoint(o.out, target);
  write_text(fs::path(o.out) / "warmstart.json", report.dump(2) + "\n");
  return kExitOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
  BenchPlan plan = parse_bench_plan(read_json_file(o.config));
  plan.bench.seed = resolve_seed(plan.bench.seed, o.seed);
  if (o.steps) plan.bench.steps = *o.steps;
  if (o.repetitions) plan.bench.repetitions = *o.repetitions;
  if (!o.reference.empty()) plan.reference = o.reference;
  if (!o.out.empty()) plan.out = o.out;
  plan.bench.validate();
  std::size_t ref_index = plan.models.size();
  for (std::size_t i = 0; i < plan.models.size(); ++i) {
    if (plan.models[i].id == plan.reference) ref_index = i;
  }
  if (ref_index == plan.models.size()) throw ConfigError("reference model " + plan.reference + " is not benchmarked");

  std::vector<BenchReport> all;
  for (BenchTask task : plan.tasks) {
    for (BenchPhase phase : plan.phases) {
      std::vector<BenchReport> group;
      for (const BenchModel& model : plan.models) {
        group.push_back(measure(model, task, phase, plan.bench));
        const BenchReport& r = group.back();
        if (r.ok && r.score_count != r.measured_score_count) {
          throw ContractError("analytic score count of " + r.model_id + " disagrees with the attention kernels");
        }
      }
      if (group.size() >= 2) out << render_comparison(compare(group, ref_index));
      all.insert(all.end(), group.begin(), group.end());
    }
  }
  if (!plan.out.empty()) {
    const fs::path dir(plan.out);
    make_dir(dir);
    write_text(dir / "reports.csv", reports_to_csv(all));
    json docs = json::array();
    for (const BenchReport& r : all) docs.push_back(to_json(r));
    write_text(dir / "reports.json", docs.dump(2) + "\n");
  }
  std::size_t failed = 0;
  for (const BenchReport& r : all) {
    if (!r.ok) {
      out << r.model_id << " " << bench_task_name(r.task) << "/" << bench_phase_name(r.phase) << ": " << r.failure
          << "\n";
      ++failed;
    }
  }
  return failed ? kExitRuntime : kExitOk;
}

std::vector<BenchReport> read_reports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return reports_from_csv(text);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  std::vector<BenchReport> out;
  if (doc.is_array()) {
    for (const json& r : doc) out.push_back(bench_report_from_json(r));
  } else {
    out.push_back(bench_report_from_json(doc));
  }
  return out;
}

int cmd_compare(const Options& o, std::ostream& out) {
  std::vector<BenchReport> reports;
  for (const std::string& path : o.reports) {
    for (BenchReport& r : read_reports(path)) {
      if (!o.task.empty() && r.task != parse_bench_task(o.task)) continue;
      if (!o.phase.empty() && r.phase != parse_bench_phase(o.phase)) continue;
      reports.push_back(std::move(r));
    }
  }
  std::size_t ref_index = 0;
  if (!o.reference.empty()) {
    ref_index = reports.size();
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (reports[i].model_id == o.reference) ref_index = i;
    }
    if (ref_index == reports.size()) throw ConfigError("no report for reference model " + o.reference);
  }
  out << render_comparison(compare(reports, ref_index));
  return kExitOk;
}

}  // namespace

void build_app(CLI::App& app, Options& o) {
  app.description("Hierarchical attention transformer toolkit");
  app.require_subcommand(1);

  CLI::App* seg = app.add_subcommand("segment", "Segment a raw corpus into a dataset cache");
  seg->add_option("--input", o.input, "Corpus file: one document per line, or blank-line separated")->required();
  seg->add_option("--out", o.out, "Output directory for the cache, vocab.txt and stats.json")->required();
  seg->add_option("--strategy", o.strategy, "Segmentation strategy: dynamic, greedy or sentence")
      ->capture_default_str();
  seg->add_option("-K,--segment-length", o.K, "Tokens per segment including [CLS]")->capture_default_str();
  seg->add_option("-N,--max-segments", o.n_max, "Maximum segments per document")->capture_default_str();
  seg->add_option("--vocab", o.vocab, "Existing vocabulary file (one token per line); built from the corpus if absent");
  seg->add_option("--vocab-size", o.vocab_size, "Largest vocabulary to build, specials included (0 = unlimited)")
      ->capture_default_str();
  seg->add_option("--min-count", o.min_count, "Minimum token frequency for a built vocabulary")->capture_default_str();

  CLI::App* tr = app.add_subcommand("train", "Train a model on a task and write checkpoint, trace and summary");
  tr->add_option("--config", o.config, "Run configuration (JSON)")->required();
  tr->add_option("--out", o.out, "Output directory (overrides the config)");
  tr->add_option("--warmstart", o.warmstart, "Flat checkpoint directory to warm-start the HAT encoder from");
  tr->add_option("--strategy", o.warmstart_strategy, "Warm-start strategy: S0, S1, S2.1, S2.2 or S2.3");
  tr->add_option("--seed", o.seed, "Seed (overrides the config and HATKIT_SEED)");
  tr->add_option("--steps", o.steps, "Training steps (overrides the config)");
  tr->add_option("--lr", o.lr, "Peak learning rate (overrides the config)");
  tr->add_option("--batch-size", o.batch_size, "Training batch size (overrides the config)");

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the configured task");
  ev->add_option("--config", o.config, "Run configuration (JSON)")->required();
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint directory")->required();
  ev->add_option("--split", o.split, "Split to evaluate: dev or train")->capture_default_str();
  ev->add_option("--seed", o.seed, "Seed for example construction (overrides the config and HATKIT_SEED)");
  ev->add_option("--out", o.out, "Also write the metrics JSON to this file");

  CLI::App* ws = app.add_subcommand("warmstart", "Initialise a HAT checkpoint from a flat checkpoint");
  ws->add_option("--source", o.source, "Flat source checkpoint directory")->required();
  ws->add_option("--strategy", o.warmstart_strategy, "Strategy: S0, S1, S2.1, S2.2 or S2.3")->required();
  ws->add_option("--config", o.config, "Configuration whose model section describes the HAT target")->required();
  ws->add_option("--out", o.out, "Output checkpoint directory")->required();
  ws->add_option("--seed", o.seed, "Seed for freshly initialised tensors (overrides the config and HATKIT_SEED)");

  CLI::App* be = app.add_subcommand("bench", "Benchmark models and print a comparison table");
  be->add_option("--config", o.config, "Benchmark configuration (JSON)")->required();
  be->add_option("--reference", o.reference, "Reference model id (overrides the config)");
  be->add_option("--out", o.out, "Directory for reports.csv and reports.json (overrides the config)");
  be->add_option("--steps", o.steps, "Timed steps per repetition (overrides the config)");
  be->add_option("--repetitions", o.repetitions, "Repetitions, at least 3 (overrides the config)");
  be->add_option("--seed", o.seed, "Seed for inputs and weights (overrides the config and HATKIT_SEED)");

  CLI::App* cmp = app.add_subcommand("compare", "Compare benchmark reports against a reference model");
  cmp->add_option("reports", o.reports, "Report files (.csv or .json)")->required();
  cmp->add_option("--reference", o.reference, "Reference model id (default: first report)");
  cmp->add_option("--task", o.task, "Keep only reports of this task: MLM, DocCLS, SegCLS or MCQA");
  cmp->add_option("--phase", o.phase, "Keep only reports of this phase: train or infer");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app("hatkit", "hatkit");
  build_app(app, o);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Help requested on a subcommand arrives here as well.
    if (e.get_exit_code() == 0) {
      for (CLI::App* sub : app.get_subcommands()) out << sub->help();
      if (app.get_subcommands().empty()) out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "segment") return cmd_segment(o, out);
    if (name == "train") return cmd_train(o, out);
    if (name == "eval") return cmd_eval(o, out);
    if (name == "warmstart") return cmd_warmstart(o, out);
    if (name == "bench") return cmd_bench(o, out);
    return cmd_compare(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitInput;
  } catch (const IoError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const PlanError& e) {
    err << "warm-start plan error: " << e.what() << "\n";
    return kExitInput;
  } catch (const LookupError& e) {
    err << "lookup error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ContractError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInput;
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace hatkit::cli
