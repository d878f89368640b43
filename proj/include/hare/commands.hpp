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

// Command implementations behind the `hare` executable. Each command reads
// its inputs, writes a metadata header line followed by its payload, and
// reports failures by throwing DataError or ConfigError; tools/hare.cpp
// maps those to exit codes.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "hare/corpus.hpp"
#include "hare/embed.hpp"
#include "hare/error.hpp"
#include "hare/extract.hpp"
#include "hare/pairs.hpp"
#include "hare/random.hpp"
#include "hare/score.hpp"
#include "hare/stats.hpp"
#include "hare/text.hpp"

namespace hare::cli {

inline constexpr const char* kToolName = "hare";
inline constexpr const char* kVersion = "0.1.0";

enum class ExtractorKind { gazetteer, external };
enum class EmbedderKind { hashed, store };
enum class OutputFormat { table, jsonl };

struct RunConfig {
  std::string reports;       // reference reports, JSONL
  std::string cand_reports;  // candidate reports; defaults to `reports`
  std::string ref_annotations;
  std::string cand_annotations;
  std::string gold;  // prep input
  std::string gazetteer;
  std::string vector_store;
  std::string expert;
  std::string manifest;
  std::vector<std::string> metrics;
  std::string out;
  std::string metrics_out;  // ablate: per-pair variant scores

  score::ScoringConfig scoring;
  ExtractorKind extractor = ExtractorKind::gazetteer;
  EmbedderKind embedder = EmbedderKind::hashed;
  embed::FallbackPolicy store_fallback = embed::FallbackPolicy::hashed_fallback;
  std::size_t embed_dim = 256;
  std::size_t linker_window = 20;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  bool exclude_zero = true;
  std::map<std::string, double> normalizers;
  double expert_max = 5.0;
  OutputFormat format = OutputFormat::table;
  corpus::PairMode prep_mode = corpus::PairMode::train;
  std::size_t max_chunk_tokens = 512;
};

inline const char* to_string(score::ThresholdMode m) {
  switch (m) {
    case score::ThresholdMode::at_or_above: return "above";
    case score::ThresholdMode::below: return "below";
    case score::ThresholdMode::none: return "none";
  }
  return "above";
}

inline score::ThresholdMode parse_threshold_mode(const std::string& s) {
  if (s == "above") return score::ThresholdMode::at_or_above;
  if (s == "below") return score::ThresholdMode::below;
  if (s == "none") return score::ThresholdMode::none;
  throw ConfigError("unknown threshold mode '" + s + "' (expected above, below or none)");
}

// ---- Config file -------------------------------------------------------------

// Applies a JSON config file. Keys mirror the long flag names with '-'
// replaced by '_'. Unknown keys are rejected so typos do not go unnoticed.
inline void apply_config_json(const nlohmann::json& j, RunConfig& cfg) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  auto str = [&](const std::string& key) {
    if (!j.at(key).is_string()) throw ConfigError("config key '" + key + "' must be a string");
    return j.at(key).get<std::string>();
  };
  auto num = [&](const std::string& key) {
    if (!j.at(key).is_number()) throw ConfigError("config key '" + key + "' must be a number");
    return j.at(key).get<double>();
  };
  auto count = [&](const std::string& key) {
    if (!j.at(key).is_number_unsigned()) {
      throw ConfigError("config key '" + key + "' must be a non-negative integer");
    }
    return j.at(key).get<std::uint64_t>();
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "reports") cfg.reports = str(key);
    else if (key == "cand_reports") cfg.cand_reports = str(key);
    else if (key == "ref_annotations") cfg.ref_annotations = str(key);
    else if (key == "cand_annotations") cfg.cand_annotations = str(key);
    else if (key == "gold") cfg.gold = str(key);
    else if (key == "gazetteer") cfg.gazetteer = str(key);
    else if (key == "vector_store") cfg.vector_store = str(key);
    else if (key == "expert") cfg.expert = str(key);
    else if (key == "manifest") cfg.manifest = str(key);
    else if (key == "threshold") cfg.scoring.entity_threshold = cfg.scoring.relation_threshold = num(key);
    else if (key == "entity_threshold") cfg.scoring.entity_threshold = num(key);
    else if (key == "relation_threshold") cfg.scoring.relation_threshold = num(key);
    else if (key == "threshold_mode") cfg.scoring.threshold_mode = parse_threshold_mode(str(key));
    else if (key == "align_tau") cfg.scoring.relation_align_tau = num(key);
    else if (key == "relation_matching") {
      const auto v = str(key);
      if (v == "soft") cfg.scoring.relation_matching = score::RelationMatching::soft;
      else if (v == "exact") cfg.scoring.relation_matching = score::RelationMatching::exact;
      else throw ConfigError("unknown relation_matching '" + v + "'");
    } else if (key == "extractor") {
      const auto v = str(key);
      if (v == "gazetteer") cfg.extractor = ExtractorKind::gazetteer;
      else if (v == "external") cfg.extractor = ExtractorKind::external;
      else throw ConfigError("unknown extractor '" + v + "'");
    } else if (key == "embedder") {
      const auto v = str(key);
      if (v == "hashed") cfg.embedder = EmbedderKind::hashed;
      else if (v == "store") cfg.embedder = EmbedderKind::store;
      else throw ConfigError("unknown embedder '" + v + "'");
    } else if (key == "store_fallback") {
      const auto v = str(key);
      if (v == "hashed") cfg.store_fallback = embed::FallbackPolicy::hashed_fallback;
      else if (v == "error") cfg.store_fallback = embed::FallbackPolicy::error;
      else throw ConfigError("unknown store_fallback '" + v + "'");
    } else if (key == "embed_dim") cfg.embed_dim = count(key);
    else if (key == "linker_window") cfg.linker_window = count(key);
    else if (key == "jobs") cfg.jobs = count(key);
    else if (key == "seed") cfg.seed = count(key);
    else if (key == "exclude_zero") {
      if (!value.is_boolean()) throw ConfigError("config key 'exclude_zero' must be a boolean");
      cfg.exclude_zero = value.get<bool>();
    } else if (key == "expert_max") cfg.expert_max = num(key);
    else if (key == "max_chunk_tokens") cfg.max_chunk_tokens = count(key);
    else if (key == "normalize") {
      if (!value.is_object()) throw ConfigError("config key 'normalize' must map metric names to maxima");
      for (const auto& [m, v] : value.items()) {
        if (!v.is_number()) throw ConfigError("normalizer for '" + m + "' must be a number");
        cfg.normalizers[m] = v.get<double>();
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

inline void load_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  apply_config_json(j, cfg);
}

// ---- Metadata ----------------------------------------------------------------

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

// Digest of a file, or of every regular file under a directory (sorted by
// relative path), so the header changes whenever an input does.
inline std::string digest_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty()) return "";
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = kFnvOffset;
    for (const auto& f : files) {
      h = fnv1a64(fs::relative(f, path).generic_string(), h);
      h = fnv1a64(digest_path(f.string()), h);
    }
    return hex64(h);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) return "missing";
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex64(fnv1a64(buf.str()));
}

// Everything that can change a command's payload. Parallelism and output
// paths are deliberately left out.
using ExtraInputs = std::vector<std::pair<std::string, std::string>>;  // role, path

inline nlohmann::ordered_json effective_config(const std::string& command, const RunConfig& cfg,
                                               const ExtraInputs& extra = {}) {
  const bool scores = command == "score" || command == "batch" || command == "ablate";
  const bool compares = command == "compare" || command == "ablate";
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  if (scores) {
    j["entity_threshold"] = cfg.scoring.entity_threshold;
    j["relation_threshold"] = cfg.scoring.relation_threshold;
    j["threshold_mode"] = to_string(cfg.scoring.threshold_mode);
    j["align_tau"] = cfg.scoring.relation_align_tau;
    j["relation_matching"] = cfg.scoring.relation_matching == score::RelationMatching::soft ? "soft" : "exact";
    j["extractor"] = cfg.extractor == ExtractorKind::gazetteer ? "gazetteer" : "external";
    if (cfg.extractor == ExtractorKind::gazetteer) j["linker_window"] = cfg.linker_window;
    j["embedder"] = cfg.embedder == EmbedderKind::hashed ? "hashed" : "store";
    if (cfg.embedder == EmbedderKind::hashed) j["embed_dim"] = cfg.embed_dim;
    else j["store_fallback"] = cfg.store_fallback == embed::FallbackPolicy::hashed_fallback ? "hashed" : "error";
  }
  if (compares) {
    j["exclude_zero"] = cfg.exclude_zero;
    j["expert_max"] = cfg.expert_max;
    j["normalize"] = cfg.normalizers;
    j["rmse_divisor"] = "n";
  }
  if (command == "prep") {
    j["prep_mode"] = cfg.prep_mode == corpus::PairMode::train ? "train" : "test";
    j["max_chunk_tokens"] = cfg.max_chunk_tokens;
  }
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  auto input = [&](const char* role, const std::string& path) {
    if (!path.empty()) inputs[role] = digest_path(path);
  };
  if (scores || command == "prep") input("reports", cfg.reports);
  if (scores) {
    input("cand_reports", cfg.cand_reports);
    if (cfg.extractor == ExtractorKind::external) {
      input("ref_annotations", cfg.ref_annotations);
      input("cand_annotations", cfg.cand_annotations);
    } else {
      input("gazetteer", cfg.gazetteer);
    }
    if (cfg.embedder == EmbedderKind::store) input("vector_store", cfg.vector_store);
    if (command != "score") input("manifest", cfg.manifest);
  }
  if (command == "prep") input("gold", cfg.gold);
  if (compares) input("expert", cfg.expert);
  if (command == "compare") {
    for (std::size_t i = 0; i < cfg.metrics.size(); ++i) {
      input(("metrics" + std::to_string(i)).c_str(), cfg.metrics[i]);
    }
  }
  for (const auto& [role, path] : extra) input(role.c_str(), path);
  j["inputs"] = inputs;
  return j;
}

inline nlohmann::ordered_json metadata(const std::string& command, const RunConfig& cfg,
                                       const ExtraInputs& extra = {}) {
  const auto config = effective_config(command, cfg, extra);
  nlohmann::ordered_json meta;
  meta["tool"] = kToolName;
  meta["version"] = kVersion;
  meta["command"] = command;
  meta["seed"] = cfg.seed;
  meta["config_digest"] = hex64(fnv1a64(config.dump()));
  meta["config"] = config;
  return nlohmann::ordered_json{{"_meta", meta}};
}

// ---- Shared plumbing ---------------------------------------------------------

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Callers write into
// preallocated slots, so the result order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing required ") + what);
  if (!std::filesystem::exists(path)) {
    throw ConfigError(std::string(what) + " '" + path + "' does not exist");
  }
}

// Output sink: the --out file when given, otherwise the provided stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw ConfigError("cannot write output file '" + path + "'");
      out_ = &file_;
    }
  }
  std::ostream& operator*() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

// Embedder and extractor shared read-only by all workers.
class Engine {
 public:
  explicit Engine(const RunConfig& cfg) {
    cfg.scoring.validate();
    if (cfg.embedder == EmbedderKind::store) {
      if (cfg.vector_store.empty()) throw ConfigError("--embedder store requires --vector-store");
      if (!std::filesystem::exists(cfg.vector_store)) {
        throw ConfigError("vector store '" + cfg.vector_store + "' does not exist");
      }
      store_ = std::make_unique<embed::VectorStore>(embed::VectorStore::load(cfg.vector_store, cfg.store_fallback));
      embedder_ = std::make_unique<embed::StoreEmbedder>(*store_);
    } else {
      embed::HashedEmbedderConfig hc;
      hc.dimension = cfg.embed_dim;
      embedder_ = std::make_unique<embed::HashedEmbedder>(hc);
    }
    if (cfg.extractor == ExtractorKind::gazetteer) {
      if (cfg.gazetteer.empty()) throw ConfigError("the gazetteer extractor needs --gazetteer");
      gazetteer_ = extract::Gazetteer::load(cfg.gazetteer);
      spdlog::info("gazetteer '{}': {} entries", cfg.gazetteer, gazetteer_->size());
    }
    if (cfg.linker_window == 0) throw ConfigError("linker window must be >= 1");
    linker_.window = cfg.linker_window;
  }

  const embed::Embedder& embedder() const { return *embedder_; }
  corpus::AnnotationSet annotate(const corpus::Report& report) const {
    return extract::extract(report, *gazetteer_, linker_);
  }

 private:
  std::unique_ptr<embed::VectorStore> store_;
  std::unique_ptr<embed::Embedder> embedder_;
  std::optional<extract::Gazetteer> gazetteer_;
  extract::LinkerConfig linker_;
};

// Where annotation sets for one side (reference or candidate) come from.
class Side {
 public:
  Side(const RunConfig& cfg, const std::string& reports, const std::string& annotations, const char* name)
      : name_(name), external_(cfg.extractor == ExtractorKind::external) {
    if (!reports.empty()) {
      require_file(reports, (std::string(name) + " reports file").c_str());
      reports_ = corpus::ReportIndex(corpus::load_reports(reports));
    }
    if (external_) {
      require_file(annotations, (std::string(name) + " annotations file (--" + name + "-annotations)").c_str());
      annotations_ = corpus::load_annotations(annotations, corpus::Source::predicted,
                                              reports.empty() ? nullptr : &*reports_);
    } else if (reports.empty()) {
      throw ConfigError(std::string("the gazetteer extractor needs ") + name + " reports (--reports)");
    }
  }

  bool has(const std::string& id) const {
    return external_ ? annotations_.find(id) != nullptr : reports_->find(id) != nullptr;
  }

  corpus::AnnotationSet get(const std::string& id, const Engine& engine) const {
    if (external_) return *annotations_.find(id);
    return engine.annotate(*reports_->find(id));
  }

  const char* name() const { return name_; }

 private:
  const char* name_;
  bool external_;
  std::optional<corpus::ReportIndex> reports_;
  corpus::AnnotationCorpus annotations_;
};

inline nlohmann::ordered_json breakdown_record(const std::string& ref_id, const std::string& cand_id,
                                               const score::HareBreakdown& b) {
  nlohmann::ordered_json rec;
  rec["ref_id"] = ref_id;
  rec["cand_id"] = cand_id;
  const auto fields = score::to_json(cand_id, b);
  for (const auto& [k, v] : fields.items()) {
    if (k != "report_id") rec[k] = v;
  }
  return rec;
}

struct ManifestEntry {
  std::string ref_id;
  std::string cand_id;
};

// CSV with header "ref_id,cand_id".
inline std::vector<ManifestEntry> read_manifest(std::istream& in) {
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    corpus::detail::strip_cr(line);
    if (corpus::detail::blank(line)) continue;
    const auto cells = corpus::detail::split_csv(line);
    if (!header) {
      if (cells.size() != 2 || cells[0] != "ref_id" || cells[1] != "cand_id") {
        throw DataError("manifest: expected header 'ref_id,cand_id' at line " + std::to_string(line_no));
      }
      header = true;
      continue;
    }
    if (cells.size() != 2 || cells[0].empty() || cells[1].empty()) {
      throw DataError("manifest: malformed record at line " + std::to_string(line_no));
    }
    out.push_back({std::string(cells[0]), std::string(cells[1])});
  }
  if (!header) throw DataError("manifest: missing header");
  return out;
}

inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
  require_file(path, "manifest (--manifest)");
  std::ifstream in(path);
  return read_manifest(in);
}

// Annotation sets for every id a manifest mentions, computed once. Ids that
// cannot be resolved are reported in `skipped` and their pairs dropped.
struct PreparedPairs {
  std::vector<std::size_t> kept;  // manifest indices
  std::vector<std::string> skipped;
  std::map<std::string, corpus::AnnotationSet> ref;
  std::map<std::string, corpus::AnnotationSet> cand;
};

inline PreparedPairs prepare_pairs(const std::vector<ManifestEntry>& manifest, const Side& ref, const Side& cand,
                                   const Engine& engine, std::size_t jobs) {
  PreparedPairs p;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& m = manifest[i];
    std::string why;
    if (!ref.has(m.ref_id)) why = "unknown reference id '" + m.ref_id + "'";
    if (!cand.has(m.cand_id)) why += std::string(why.empty() ? "" : ", ") + "unknown candidate id '" + m.cand_id + "'";
    if (!why.empty()) {
      p.skipped.push_back("pair " + std::to_string(i + 1) + ": " + why);
      continue;
    }
    p.kept.push_back(i);
    p.ref.emplace(m.ref_id, corpus::AnnotationSet{});
    p.cand.emplace(m.cand_id, corpus::AnnotationSet{});
  }
  std::vector<std::pair<corpus::AnnotationSet*, std::pair<const Side*, std::string>>> work;
  for (auto& [id, set] : p.ref) work.push_back({&set, {&ref, id}});
  for (auto& [id, set] : p.cand) work.push_back({&set, {&cand, id}});
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    *work[i].first = work[i].second.first->get(work[i].second.second, engine);
  });
  return p;
}

inline std::string format_skipped(const std::vector<std::string>& skipped) {
  std::string msg = std::to_string(skipped.size()) + " manifest pair(s) skipped:";
  for (const auto& s : skipped) msg += "\n  " + s;
  return msg;
}

// ---- score -------------------------------------------------------------------

inline corpus::Report read_text_report(const std::string& path, const std::string& id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open report file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return {id, buf.str()};
}

// Scores one candidate against one reference. With --reports (or the
// external extractor) `ref` and `cand` are report ids; otherwise they are
// paths to plain-text reports.
inline int cmd_score(const RunConfig& cfg, const std::string& ref, const std::string& cand, std::ostream& out) {
  const Engine engine(cfg);
  corpus::AnnotationSet ref_set;
  corpus::AnnotationSet cand_set;
  ExtraInputs files;
  if (cfg.extractor == ExtractorKind::gazetteer && cfg.reports.empty()) {
    files = {{"ref", ref}, {"cand", cand}};
    ref_set = engine.annotate(read_text_report(ref, "ref"));
    cand_set = engine.annotate(read_text_report(cand, "cand"));
  } else {
    const Side ref_side(cfg, cfg.reports, cfg.ref_annotations, "ref");
    const Side cand_side(cfg, cfg.cand_reports.empty() ? cfg.reports : cfg.cand_reports, cfg.cand_annotations,
                         "cand");
    if (!ref_side.has(ref)) throw DataError("unknown reference id '" + ref + "'");
    if (!cand_side.has(cand)) throw DataError("unknown candidate id '" + cand + "'");
    ref_set = ref_side.get(ref, engine);
    cand_set = cand_side.get(cand, engine);
  }
  const auto b = score::hare_score(ref_set, cand_set, engine.embedder(), cfg.scoring);
  Sink sink(cfg.out, out);
  *sink << metadata("score", cfg, files).dump() << '\n' << breakdown_record(ref, cand, b).dump() << '\n';
  return 0;
}

// ---- batch -------------------------------------------------------------------

inline int cmd_batch(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto manifest = load_manifest(cfg.manifest);
  const Engine engine(cfg);
  const Side ref(cfg, cfg.reports, cfg.ref_annotations, "ref");
  const Side cand(cfg, cfg.cand_reports.empty() ? cfg.reports : cfg.cand_reports, cfg.cand_annotations, "cand");
  const auto prepared = prepare_pairs(manifest, ref, cand, engine, cfg.jobs);

  std::vector<score::HareBreakdown> results(prepared.kept.size());
  parallel_for(prepared.kept.size(), cfg.jobs, [&](std::size_t k) {
    const auto& m = manifest[prepared.kept[k]];
    results[k] = score::hare_score(prepared.ref.at(m.ref_id), prepared.cand.at(m.cand_id), engine.embedder(),
                                   cfg.scoring);
  });
  spdlog::info("batch: scored {} of {} pairs with {} job(s)", results.size(), manifest.size(), cfg.jobs);

  Sink sink(cfg.out, out);
  *sink << metadata("batch", cfg).dump() << '\n';
  double total = 0.0;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& m = manifest[prepared.kept[k]];
    *sink << breakdown_record(m.ref_id, m.cand_id, results[k]).dump() << '\n';
    total += results[k].hare;
  }
  nlohmann::ordered_json summary;
  summary["pairs"] = manifest.size();
  summary["scored"] = results.size();
  summary["skipped"] = prepared.skipped.size();
  if (results.empty()) summary["mean_hare"] = nullptr;
  else summary["mean_hare"] = total / static_cast<double>(results.size());
  *sink << nlohmann::ordered_json{{"summary", summary}}.dump() << '\n';
  if (!prepared.skipped.empty()) {
    err << "hare: data error: " << format_skipped(prepared.skipped) << '\n';
    return 1;
  }
  return 0;
}

// ---- compare -----------------------------------------------------------------

// Merges several metric files on report id; every file must cover the same
// ids.
inline stats::MetricTable merge_metric_tables(const std::vector<stats::MetricTable>& tables) {
  if (tables.empty()) throw ConfigError("compare needs at least one --metrics file");
  stats::MetricTable merged;
  merged.ids = tables[0].ids;
  std::map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < merged.ids.size(); ++r) row_of[merged.ids[r]] = r;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    const auto& table = tables[t];
    std::vector<std::size_t> where(table.ids.size());
    std::vector<std::string> offenders;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < table.ids.size(); ++r) {
      auto it = row_of.find(table.ids[r]);
      if (it == row_of.end()) offenders.push_back(table.ids[r]);
      else where[r] = it->second;
      seen.insert(table.ids[r]);
    }
    for (const auto& id : merged.ids) {
      if (!seen.count(id)) offenders.push_back(id);
    }
    if (!offenders.empty()) {
      std::string msg = "metric file " + std::to_string(t + 1) + " covers different report ids: ";
      for (std::size_t i = 0; i < offenders.size(); ++i) msg += (i ? ", " : "") + offenders[i];
      throw DataError(msg);
    }
    for (std::size_t m = 0; m < table.names.size(); ++m) {
      std::vector<double> col(merged.ids.size());
      for (std::size_t r = 0; r < table.ids.size(); ++r) col[where[r]] = table.columns[m][r];
      merged.add_column(table.names[m], std::move(col));
    }
  }
  return merged;
}

struct ComparisonRun {
  std::vector<stats::MetricComparison> rows;
  std::size_t reports = 0;
  std::size_t excluded_zero = 0;
};

// Aligns, normalizes and compares every metric column against the expert
// scores.
inline ComparisonRun run_comparison(const stats::MetricTable& table, const std::vector<corpus::ExpertScore>& expert,
                                    const RunConfig& cfg) {
  const auto aligned = stats::align(table, expert, cfg.exclude_zero);
  ComparisonRun run;
  run.reports = table.ids.size();
  run.excluded_zero = aligned.excluded_zero;
  const auto expert_norm = stats::normalize(aligned.expert, cfg.expert_max);
  std::vector<std::vector<double>> columns;
  for (std::size_t m = 0; m < aligned.names.size(); ++m) {
    const auto& name = aligned.names[m];
    auto it = cfg.normalizers.find(name);
    const double max = it != cfg.normalizers.end() ? it->second : stats::default_max(name);
    try {
      columns.push_back(stats::normalize(aligned.metrics[m], max));
    } catch (const DataError& e) {
      throw DataError("metric '" + name + "': " + e.what());
    }
  }
  run.rows = stats::compare_metrics(aligned.names, columns, expert_norm);
  return run;
}

inline void write_comparison(const ComparisonRun& run, const std::string& command, const RunConfig& cfg,
                             std::ostream& out) {
  const auto meta = metadata(command, cfg);
  nlohmann::ordered_json summary;
  summary["reports"] = run.reports;
  summary["excluded_zero"] = run.excluded_zero;
  summary["n"] = run.reports - run.excluded_zero;
  if (cfg.format == OutputFormat::jsonl) {
    out << meta.dump() << '\n';
    for (const auto& row : run.rows) out << stats::to_json(row).dump() << '\n';
    out << nlohmann::ordered_json{{"summary", summary}}.dump() << '\n';
    return;
  }
  out << "# " << meta.dump() << '\n';
  out << "# reports=" << run.reports << " excluded_zero=" << run.excluded_zero
      << " n=" << run.reports - run.excluded_zero << " rmse_divisor=n\n";
  stats::write_comparison_table(out, run.rows);
}

inline std::vector<corpus::ExpertScore> load_expert(const RunConfig& cfg) {
  require_file(cfg.expert, "expert scores file (--expert)");
  return corpus::load_expert_scores(cfg.expert);
}

inline int cmd_compare(const RunConfig& cfg, std::ostream& out) {
  std::vector<stats::MetricTable> tables;
  for (const auto& path : cfg.metrics) {
    require_file(path, "metrics file");
    std::ifstream in(path);
    try {
      tables.push_back(stats::read_metric_table(in));
    } catch (const DataError& e) {
      throw DataError("'" + path + "': " + e.what());
    }
  }
  const auto merged = merge_metric_tables(tables);
  const auto run = run_comparison(merged, load_expert(cfg), cfg);
  Sink sink(cfg.out, out);
  write_comparison(run, "compare", cfg, *sink);
  return 0;
}

// ---- ablate ------------------------------------------------------------------

// Scores the manifest under each threshold variant and compares each
// variant's HARE values with the expert scores, which are keyed by
// candidate id.
inline int cmd_ablate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto manifest = load_manifest(cfg.manifest);
  const auto expert = load_expert(cfg);
  const Engine engine(cfg);
  const Side ref(cfg, cfg.reports, cfg.ref_annotations, "ref");
  const Side cand(cfg, cfg.cand_reports.empty() ? cfg.reports : cfg.cand_reports, cfg.cand_annotations, "cand");
  const auto prepared = prepare_pairs(manifest, ref, cand, engine, cfg.jobs);
  if (!prepared.skipped.empty()) {
    err << "hare: data error: " << format_skipped(prepared.skipped) << '\n';
    return 1;
  }

  const auto names = score::ablation_variants(cfg.scoring);
  const auto configs = score::ablation_configs(cfg.scoring);
  std::vector<std::vector<double>> values(names.size(), std::vector<double>(manifest.size()));
  parallel_for(manifest.size(), cfg.jobs, [&](std::size_t i) {
    const auto& m = manifest[i];
    for (std::size_t v = 0; v < configs.size(); ++v) {
      values[v][i] = score::hare_score(prepared.ref.at(m.ref_id), prepared.cand.at(m.cand_id), engine.embedder(),
                                       configs[v])
                         .hare;
    }
  });

  stats::MetricTable table;
  std::set<std::string> seen;
  for (const auto& m : manifest) {
    if (!seen.insert(m.cand_id).second) {
      throw DataError("ablate: candidate id '" + m.cand_id + "' appears twice; expert scores are keyed by it");
    }
    table.ids.push_back(m.cand_id);
  }
  for (std::size_t v = 0; v < names.size(); ++v) table.add_column(names[v], values[v]);
  if (!cfg.metrics_out.empty()) {
    std::ofstream mo(cfg.metrics_out, std::ios::binary | std::ios::trunc);
    if (!mo) throw ConfigError("cannot write '" + cfg.metrics_out + "'");
    stats::write_metric_table(mo, table);
  }
  RunConfig cmp = cfg;
  for (const auto& n : names) {
    if (!cmp.normalizers.count(n)) cmp.normalizers[n] = 2.0;
  }
  const auto run = run_comparison(table, expert, cmp);
  Sink sink(cfg.out, out);
  write_comparison(run, "ablate", cfg, *sink);
  return 0;
}

// ---- prep --------------------------------------------------------------------

inline std::uint64_t report_seed(std::uint64_t seed, const std::string& report_id) {
  return splitmix64(seed ^ fnv1a64(report_id));
}

struct PrepCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t shortfall = 0;
  std::size_t chunks = 0;
  std::size_t max_chunk_tokens = 0;
};

// Writes <out>/pairs.jsonl (marked relation samples) and <out>/chunks.jsonl
// (sentence chunks of at most max_chunk_tokens tokens), then prints counts.
inline int cmd_prep(const RunConfig& cfg, std::ostream& out) {
  namespace fs = std::filesystem;
  require_file(cfg.reports, "reports file (--reports)");
  require_file(cfg.gold, "gold annotations file (--gold)");
  if (cfg.out.empty()) throw ConfigError("prep needs an output directory (--out)");
  if (cfg.max_chunk_tokens == 0) throw ConfigError("max chunk tokens must be >= 1");
  const corpus::ReportIndex reports(corpus::load_reports(cfg.reports));
  const auto gold = corpus::load_annotations(cfg.gold, corpus::Source::gold, &reports);

  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (!fs::is_directory(cfg.out)) throw ConfigError("cannot create output directory '" + cfg.out + "'");
  std::ofstream pairs_out(fs::path(cfg.out) / "pairs.jsonl", std::ios::binary | std::ios::trunc);
  std::ofstream chunks_out(fs::path(cfg.out) / "chunks.jsonl", std::ios::binary | std::ios::trunc);
  if (!pairs_out || !chunks_out) throw ConfigError("cannot write into '" + cfg.out + "'");

  const auto meta = metadata("prep", cfg).dump();
  pairs_out << meta << '\n';
  chunks_out << meta << '\n';
  PrepCounts counts;
  for (const auto& set : gold.sets()) {
    const auto& report = *reports.find(set.report_id);
    const auto pairs = corpus::build_relation_pairs(set, report, cfg.prep_mode, report_seed(cfg.seed, report.id));
    for (const auto& s : pairs.samples) pairs_out << corpus::to_json(s).dump() << '\n';
    counts.positives += pairs.positives;
    counts.negatives += pairs.negatives;
    counts.shortfall += pairs.shortfall;
  }
  for (const auto& report : reports.reports()) {
    const text::Utf8Index index(report.text);
    const auto sentences = text::split_sentences_bytes(report.text);
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      const auto sb = sentences[s];
      const auto tokens = text::tokenize(std::string_view(report.text).substr(sb.start, sb.size()), sb.start);
      const auto chunks = text::chunk_sentence(tokens, cfg.max_chunk_tokens);
      for (std::size_t c = 0; c < chunks.size(); ++c) {
        const text::Span bytes{chunks[c].front().begin, chunks[c].back().end};
        const text::Span cps = index.to_cps(bytes);
        nlohmann::ordered_json rec;
        rec["report_id"] = report.id;
        rec["sentence"] = s;
        rec["chunk"] = c;
        rec["start"] = cps.start;
        rec["end"] = cps.end;
        rec["tokens"] = chunks[c].size();
        rec["text"] = report.text.substr(bytes.start, bytes.size());
        chunks_out << rec.dump() << '\n';
        ++counts.chunks;
        counts.max_chunk_tokens = std::max(counts.max_chunk_tokens, chunks[c].size());
      }
    }
  }

  nlohmann::ordered_json summary;
  summary["reports"] = reports.size();
  summary["positives"] = counts.positives;
  summary["negatives"] = counts.negatives;
  summary["samples"] = counts.positives + counts.negatives;
  summary["shortfall"] = counts.shortfall;
  summary["chunks"] = counts.chunks;
  summary["max_chunk_tokens"] = counts.max_chunk_tokens;
  out << meta << '\n' << nlohmann::ordered_json{{"summary", summary}}.dump() << '\n';
  return 0;
}

}  // namespace hare::cli
