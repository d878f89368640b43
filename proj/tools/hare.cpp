// Copyright 2026 The HARE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// hare: command-line front end. Flags override values from --config.
//
// Exit codes: 0 success, 1 data error, 2 config error, 3 internal error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "hare/commands.hpp"

namespace {

using hare::cli::RunConfig;

// Every flag is optional so that config-file values survive unless the flag
// is given explicitly.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<double> threshold;
  std::optional<std::string> threshold_mode;
  std::optional<double> align_tau;
  std::optional<std::string> relation_matching;
  std::optional<std::string> embedder;
  std::optional<std::string> extractor;
  std::optional<std::string> store_fallback;
  std::optional<std::size_t> embed_dim;
  std::optional<std::size_t> linker_window;
  std::optional<bool> exclude_zero;
  std::optional<std::string> out;
  std::optional<std::string> reports;
  std::optional<std::string> cand_reports;
  std::optional<std::string> ref_annotations;
  std::optional<std::string> cand_annotations;
  std::optional<std::string> gold;
  std::optional<std::string> gazetteer;
  std::optional<std::string> vector_store;
  std::optional<std::string> expert;
  std::optional<std::string> manifest;
  std::optional<std::string> metrics_out;
  std::optional<double> expert_max;
  std::optional<std::string> format;
  std::optional<std::string> mode;
  std::optional<std::size_t> max_chunk_tokens;
  std::vector<std::string> metrics;
  std::vector<std::string> normalize;
  std::string ref;
  std::string cand;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file; flags take precedence");
  cmd->add_option("--seed", f.seed, "Seed for every random choice");
  cmd->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--threshold", f.threshold, "Confidence threshold for entities and relations");
  cmd->add_option("--threshold-mode", f.threshold_mode, "Confidence filter")
      ->check(CLI::IsMember({"above", "below", "none"}));
  cmd->add_option("--align-tau", f.align_tau, "Endpoint similarity needed to align relations");
  cmd->add_option("--relation-matching", f.relation_matching, "Relation endpoint matching")
      ->check(CLI::IsMember({"soft", "exact"}));
  cmd->add_option("--embedder", f.embedder, "Entity embedder")->check(CLI::IsMember({"hashed", "store"}));
  cmd->add_option("--extractor", f.extractor, "Annotation source")
      ->check(CLI::IsMember({"gazetteer", "external"}));
  cmd->add_option("--store-fallback", f.store_fallback, "Vector store miss policy")
      ->check(CLI::IsMember({"hashed", "error"}));
  cmd->add_option("--embed-dim", f.embed_dim, "Hashed embedder dimension");
  cmd->add_option("--linker-window", f.linker_window, "Relation linker window in tokens");
  cmd->add_flag("--exclude-zero", f.exclude_zero, "Drop reports whose expert score is 0 (default true)");
  cmd->add_option("--out", f.out, "Output path");
  cmd->add_option("--reports", f.reports, "Reports file (JSONL)");
  cmd->add_option("--cand-reports", f.cand_reports, "Candidate reports file; defaults to --reports");
  cmd->add_option("--ref-annotations", f.ref_annotations, "Reference annotations (external extractor)");
  cmd->add_option("--cand-annotations", f.cand_annotations, "Candidate annotations (external extractor)");
  cmd->add_option("--gazetteer", f.gazetteer, "Gazetteer directory (default: bundled lexicons)");
  cmd->add_option("--vector-store", f.vector_store, "Vector store file");
}

template <typename T>
void set_if(const std::optional<T>& v, T& target) {
  if (v) target = *v;
}

RunConfig resolve(const Flags& f) {
  RunConfig cfg;
#ifdef HARE_GAZETTEER_DIR
  cfg.gazetteer = HARE_GAZETTEER_DIR;
#endif
  if (f.config) hare::cli::load_config_file(*f.config, cfg);
  set_if(f.seed, cfg.seed);
  set_if(f.jobs, cfg.jobs);
  if (f.threshold) cfg.scoring.entity_threshold = cfg.scoring.relation_threshold = *f.threshold;
  if (f.threshold_mode) cfg.scoring.threshold_mode = hare::cli::parse_threshold_mode(*f.threshold_mode);
  set_if(f.align_tau, cfg.scoring.relation_align_tau);
  if (f.relation_matching) {
    cfg.scoring.relation_matching =
        *f.relation_matching == "exact" ? hare::score::RelationMatching::exact : hare::score::RelationMatching::soft;
  }
  if (f.embedder) cfg.embedder = *f.embedder == "store" ? hare::cli::EmbedderKind::store : hare::cli::EmbedderKind::hashed;
  if (f.extractor) {
    cfg.extractor = *f.extractor == "external" ? hare::cli::ExtractorKind::external : hare::cli::ExtractorKind::gazetteer;
  }
  if (f.store_fallback) {
    cfg.store_fallback =
        *f.store_fallback == "error" ? hare::embed::FallbackPolicy::error : hare::embed::FallbackPolicy::hashed_fallback;
  }
  set_if(f.embed_dim, cfg.embed_dim);
  set_if(f.linker_window, cfg.linker_window);
  set_if(f.exclude_zero, cfg.exclude_zero);
  set_if(f.out, cfg.out);
  set_if(f.reports, cfg.reports);
  set_if(f.cand_reports, cfg.cand_reports);
  set_if(f.ref_annotations, cfg.ref_annotations);
  set_if(f.cand_annotations, cfg.cand_annotations);
  set_if(f.gold, cfg.gold);
  set_if(f.gazetteer, cfg.gazetteer);
  set_if(f.vector_store, cfg.vector_store);
  set_if(f.expert, cfg.expert);
  set_if(f.manifest, cfg.manifest);
  set_if(f.metrics_out, cfg.metrics_out);
  set_if(f.expert_max, cfg.expert_max);
  set_if(f.max_chunk_tokens, cfg.max_chunk_tokens);
  if (f.format) cfg.format = *f.format == "jsonl" ? hare::cli::OutputFormat::jsonl : hare::cli::OutputFormat::table;
  if (f.mode) cfg.prep_mode = *f.mode == "test" ? hare::corpus::PairMode::test : hare::corpus::PairMode::train;
  if (!f.metrics.empty()) cfg.metrics = f.metrics;
  for (const auto& entry : f.normalize) {
    const auto eq = entry.rfind('=');
    double max = 0.0;
    try {
      if (eq == std::string::npos || eq == 0) throw std::invalid_argument(entry);
      max = std::stod(entry.substr(eq + 1));
    } catch (const std::exception&) {
      throw hare::ConfigError("--normalize expects <metric>=<max>, got '" + entry + "'");
    }
    cfg.normalizers[entry.substr(0, eq)] = max;
  }
  return cfg;
}

void setup_logging() {
  auto logger = spdlog::stderr_logger_st("hare");
  logger->set_pattern("hare [%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("HARE_LOG")) {
    const std::string level = env;
    if (level == "error") spdlog::set_level(spdlog::level::err);
    else if (level == "warn") spdlog::set_level(spdlog::level::warn);
    else if (level == "info") spdlog::set_level(spdlog::level::info);
    else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring unknown HARE_LOG level '{}'", level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"HARE clinical report scoring and metric validation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", hare::cli::kVersion);
  Flags f;

  auto* score = app.add_subcommand("score", "Score one candidate report against one reference");
  add_common(score, f);
  score->add_option("ref", f.ref, "Reference: report id, or a plain-text file without --reports")->required();
  score->add_option("cand", f.cand, "Candidate: report id, or a plain-text file without --reports")->required();

  auto* batch = app.add_subcommand("batch", "Score every pair in a manifest");
  add_common(batch, f);
  batch->add_option("--manifest", f.manifest, "CSV with header ref_id,cand_id")->required();

  auto* compare = app.add_subcommand("compare", "Correlate metric values with expert scores");
  add_common(compare, f);
  compare->add_option("--metrics", f.metrics, "Metric file (report_id,<metric>,...); repeatable")->required();
  compare->add_option("--expert", f.expert, "Expert scores CSV (report_id,score)");
  compare->add_option("--normalize", f.normalize, "Per-metric maximum as <metric>=<max>; repeatable");
  compare->add_option("--expert-max", f.expert_max, "Expert score maximum (default 5)");
  compare->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"table", "jsonl"}));

  auto* ablate = app.add_subcommand("ablate", "Compare threshold variants against expert scores");
  add_common(ablate, f);
  ablate->add_option("--manifest", f.manifest, "CSV with header ref_id,cand_id")->required();
  ablate->add_option("--expert", f.expert, "Expert scores CSV keyed by candidate id");
  ablate->add_option("--metrics-out", f.metrics_out, "Also write per-pair variant scores here");
  ablate->add_option("--expert-max", f.expert_max, "Expert score maximum (default 5)");
  ablate->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"table", "jsonl"}));

  auto* prep = app.add_subcommand("prep", "Build relation-classification samples and sentence chunks");
  add_common(prep, f);
  prep->add_option("--gold", f.gold, "Gold annotations file")->required();
  prep->add_option("--mode", f.mode, "Negative ratio: train 1:1, test 1:3")->check(CLI::IsMember({"train", "test"}));
  prep->add_option("--max-chunk-tokens", f.max_chunk_tokens, "Longest chunk in tokens (default 512)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = resolve(f);
    if (score->parsed()) return hare::cli::cmd_score(cfg, f.ref, f.cand, std::cout);
    if (batch->parsed()) return hare::cli::cmd_batch(cfg, std::cout, std::cerr);
    if (compare->parsed()) return hare::cli::cmd_compare(cfg, std::cout);
    if (ablate->parsed()) return hare::cli::cmd_ablate(cfg, std::cout, std::cerr);
    if (prep->parsed()) return hare::cli::cmd_prep(cfg, std::cout);
  } catch (const hare::DataError& e) {
    std::cerr << "hare: data error: " << e.what() << '\n';
    return 1;
  } catch (const hare::ConfigError& e) {
    std::cerr << "hare: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hare: internal error: " << e.what() << '\n';
    return 3;
  }
  return 3;
}
