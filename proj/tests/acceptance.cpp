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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Runtime budgets are part of each criterion.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hare/corpus.hpp"
#include "hare/embed.hpp"
#include "hare/extract.hpp"
#include "hare/score.hpp"
#include "hare/stats.hpp"
#include "hare/text.hpp"
#include "test_support.hpp"

namespace {

using namespace hare::corpus;
using hare::testing::below;
using hare::testing::TempDir;
using hare::testing::unit;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

int run_cli(const std::string& args, const TempDir& dir) {
  const std::string log = (dir.path() / "cli.log").string();
  const std::string cmd = "'" + std::string(HARE_CLI_PATH) + "' " + args + " >>'" + log + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::vector<nlohmann::json> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

// ---- Formula oracle -------------------------------------------------------------

Outcome formula_oracle() {
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t rows = below(rng, 9);
    const std::size_t cols = below(rng, 9);
    std::vector<std::vector<double>> s(rows, std::vector<double>(cols));
    std::vector<double> cells;
    for (auto& r : s) {
      for (auto& c : r) {
        c = unit(rng);
        cells.push_back(c);
      }
    }
    const auto got = hare::score::entity_prf(hare::score::SimilarityMatrix(rows, cols, cells));
    const auto want = hare::testing::entity_prf_oracle(s, rows, cols);
    worst = std::max({worst, std::fabs(got.precision - want.precision), std::fabs(got.recall - want.recall),
                      std::fabs(got.f1 - want.f1)});
  }
  return {worst <= 1e-9, "100 matrices (dims 0-8), max abs deviation " + fmt(worst)};
}

// ---- Identity suite -------------------------------------------------------------

Outcome identity_suite() {
  const auto reports = load_reports(std::string(HARE_DATA_DIR) + "/fixtures/reports.jsonl");
  const auto gaz = hare::extract::Gazetteer::load(std::string(HARE_DATA_DIR) + "/gazetteer");
  const hare::embed::HashedEmbedder emb;
  const hare::score::ScoringConfig cfg;
  std::vector<AnnotationSet> sets;
  std::size_t tagged = 0, linked = 0;
  for (const auto& r : reports) {
    sets.push_back(hare::extract::extract(r, gaz, {}));
    tagged += !sets.back().entities.empty();
    linked += !sets.back().relations.empty();
  }
  std::size_t identity_failures = 0;
  for (const auto& s : sets) {
    if (hare::score::hare_score(s, s, emb, cfg).hare != 2.0) ++identity_failures;
  }
  double worst = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      const auto a = hare::score::hare_score(sets[i], sets[j], emb, cfg);
      const auto b = hare::score::hare_score(sets[j], sets[i], emb, cfg);
      worst = std::max({worst, std::fabs(a.f1_e - b.f1_e), std::fabs(a.f1_r - b.f1_r),
                        std::fabs(a.precision_e - b.recall_e), std::fabs(a.recall_e - b.precision_e),
                        std::fabs(a.precision_r - b.recall_r), std::fabs(a.recall_r - b.precision_r)});
      ++pairs;
    }
  }
  const bool pass = tagged >= 20 && linked >= 20 && identity_failures == 0 && worst <= 1e-12;
  return {pass, std::to_string(sets.size()) + " fixtures (" + std::to_string(tagged) + " with entities, " +
                    std::to_string(linked) + " with relations), hare(x,x)=2 failures " + std::to_string(identity_failures) +
                    ", " + std::to_string(pairs) + " swapped pairs, max deviation " + fmt(worst)};
}

// ---- Statistics oracle ----------------------------------------------------------

Outcome statistics_oracle() {
  std::mt19937_64 rng(2002);
  double worst = 0.0;
  double worst_r2 = 0.0;
  std::size_t with_ties = 0;
  for (int i = 0; i < 1000; ++i) {
    const bool ties = i % 2 == 0;
    std::vector<double> x, y;
    auto flat = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double a) { return a == v[0]; });
    };
    do {
      const std::size_t n = 3 + below(rng, 48);
      x.assign(n, 0.0);
      y.assign(n, 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        x[k] = ties ? static_cast<double>(below(rng, 5)) / 4.0 : unit(rng) * 2.0;
        y[k] = ties ? static_cast<double>(below(rng, 6)) : unit(rng) * 5.0;
      }
    } while (flat(x) || flat(y));
    with_ties += ties;
    const auto fit = hare::stats::ols_simple(x, y);
    const auto want = hare::testing::ols_oracle(x, y);
    const double r = hare::stats::pearson(x, y).coefficient;
    worst = std::max({worst, std::fabs(r - hare::testing::pearson_oracle(x, y)),
                      std::fabs(hare::stats::spearman(x, y).coefficient - hare::testing::spearman_oracle(x, y)),
                      std::fabs(hare::stats::kendall_tau_b(x, y).coefficient - hare::testing::kendall_oracle(x, y)),
                      std::fabs(fit.slope - want.slope), std::fabs(fit.intercept - want.intercept),
                      std::fabs(fit.r2 - want.r2), std::fabs(fit.rmse - want.rmse)});
    worst_r2 = std::max(worst_r2, std::fabs(fit.r2 - r * r));
  }
  return {worst <= 1e-9 && worst_r2 <= 1e-9,
          "1000 samples (n 3-50, " + std::to_string(with_ties) + " with ties), max deviation " + fmt(worst) +
              ", max |r2 - r^2| " + fmt(worst_r2)};
}

// ---- Threshold partition --------------------------------------------------------

Outcome threshold_partition() {
  using hare::extract::FilterMode;
  std::mt19937_64 rng(3003);
  std::size_t entities = 0, relations = 0, dangling = 0, violations = 0;
  for (int i = 0; i < 500; ++i) {
    const auto a = hare::testing::random_annotations(rng);
    const double t = below(rng, 2) ? 0.7 : unit(rng);
    const auto above = hare::extract::filter_by_confidence(a, t, FilterMode::keep_at_or_above);
    const auto under = hare::extract::filter_by_confidence(a, t, FilterMode::keep_below);
    hare::score::ScoringConfig none;
    none.threshold_mode = hare::score::ThresholdMode::none;
    const auto all = hare::score::apply_threshold(a, none);
    if (all != a) ++violations;

    // Entities: every item lands in exactly one side; the union is the input.
    std::vector<std::size_t> index_in(a.entities.size());
    std::size_t na = 0, nb = 0;
    for (std::size_t e = 0; e < a.entities.size(); ++e) {
      const bool keep = a.entities[e].confidence >= t;
      const auto& side = keep ? above.entities : under.entities;
      const auto& other = keep ? under.entities : above.entities;
      std::size_t& pos = keep ? na : nb;
      if (pos >= side.size() || side[pos] != a.entities[e]) ++violations;
      if (std::find(other.begin(), other.end(), a.entities[e]) != other.end()) ++violations;
      index_in[e] = pos++;
    }
    if (na != above.entities.size() || nb != under.entities.size()) ++violations;
    entities += a.entities.size();

    // Relations: routed by their own confidence; a routed relation survives
    // exactly when both endpoints survive on the same side.
    std::vector<RelationInstance> want_above, want_below;
    for (const auto& r : a.relations) {
      const bool keep = r.confidence >= t;
      const bool head_ok = (a.entities[r.head].confidence >= t) == keep;
      const bool tail_ok = (a.entities[r.tail].confidence >= t) == keep;
      if (!head_ok || !tail_ok) {
        ++dangling;
        continue;
      }
      (keep ? want_above : want_below).push_back({index_in[r.head], index_in[r.tail], r.type, r.confidence});
    }
    if (want_above != above.relations || want_below != under.relations) ++violations;
    relations += a.relations.size();
  }
  return {violations == 0, "500 sets: " + std::to_string(entities) + " entities partitioned exactly, " +
                               std::to_string(relations) + " relations routed by confidence (" +
                               std::to_string(dangling) + " dropped with a filtered endpoint), " +
                               std::to_string(violations) + " violations"};
}

// ---- Ablation ordering ----------------------------------------------------------

const std::vector<std::pair<Label, std::vector<std::string>>>& vocabulary() {
  static const std::vector<std::pair<Label, std::vector<std::string>>> v = {
      {Label::anatomical_site, {"left breast", "right axillary lymph node", "colon", "stomach", "liver",
                                "skin of back", "prostate", "cervical lymph node", "lung", "thyroid"}},
      {Label::pathological_diagnosis, {"invasive ductal carcinoma", "diffuse large B-cell lymphoma",
                                       "adenocarcinoma", "melanoma", "classical Hodgkin lymphoma",
                                       "squamous cell carcinoma", "follicular lymphoma", "seminoma"}},
      {Label::diagnosis_descriptor, {"grade 2", "poorly differentiated", "suggestive of", "nodular sclerosis",
                                     "well differentiated", "consistent with", "high grade", "focal"}},
      {Label::ihc_marker, {"CD20", "CD3", "CD10", "CD30", "ER", "PR", "HER2", "Ki-67", "PAX5", "BCL2",
                           "CK7", "CK20", "SOX10", "TTF-1", "MUM1", "CDX2"}},
      {Label::ihc_modifier, {"strongly positive", "negative", "weakly positive", "patchy", "diffuse",
                             "equivocal", "focally positive", "high"}},
  };
  return v;
}

const std::vector<std::string>& words_for(Label l) {
  for (const auto& [label, words] : vocabulary()) {
    if (label == l) return words;
  }
  throw std::logic_error("no vocabulary");
}

struct SlotPlan {
  Label label;
  std::string surface;
};

// Appends an entity; offsets only need to be distinct and well formed.
std::size_t push_entity(AnnotationSet& set, Label label, const std::string& surface, double conf) {
  const std::size_t start = set.entities.empty() ? 0 : set.entities.back().end + 1;
  set.entities.push_back({start, start + hare::text::utf8_length(surface), label, surface, conf});
  return set.entities.size() - 1;
}

// Distractor extractions: low-confidence entities with random labels and
// surfaces, linked when their labels allow it.
void add_distractors(AnnotationSet& set, std::mt19937_64& rng) {
  const std::size_t first = set.entities.size();
  const std::size_t n = 2 + below(rng, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [label, words] = vocabulary()[below(rng, vocabulary().size())];
    push_entity(set, label, words[below(rng, words.size())], 0.65 * unit(rng));
  }
  for (std::size_t h = first; h < set.entities.size(); ++h) {
    for (std::size_t t = first; t < set.entities.size(); ++t) {
      if (auto type = relation_type_for(set.entities[h].label, set.entities[t].label)) {
        set.relations.push_back({h, t, *type, 0.65 * unit(rng)});
      }
    }
  }
}

void add_slots(AnnotationSet& set, const std::vector<SlotPlan>& slots, std::mt19937_64& rng) {
  auto conf = [&] { return 0.75 + 0.25 * unit(rng); };
  std::vector<std::size_t> idx;
  for (const auto& s : slots) idx.push_back(push_entity(set, s.label, s.surface, conf()));
  // Slot layout: site, diagnosis, descriptor, then (marker, modifier) pairs.
  set.relations.push_back({idx[1], idx[2], RelationType::diagnosis_descriptor, conf()});
  for (std::size_t k = 3; k + 1 < idx.size(); k += 2) {
    set.relations.push_back({idx[k], idx[k + 1], RelationType::marker_modifier, conf()});
  }
}

Outcome ablation_ordering() {
  std::mt19937_64 rng(4004);
  TempDir dir;
  AnnotationCorpus ref_corpus, cand_corpus;
  std::vector<ExpertScore> quality;
  std::ostringstream manifest;
  manifest << "ref_id,cand_id\n";
  for (int i = 0; i < 200; ++i) {
    std::vector<Label> layout = {Label::anatomical_site, Label::pathological_diagnosis, Label::diagnosis_descriptor};
    for (int k = 0; k < 3; ++k) {
      layout.push_back(Label::ihc_marker);
      layout.push_back(Label::ihc_modifier);
    }
    std::vector<SlotPlan> truth;
    for (Label l : layout) truth.push_back({l, words_for(l)[below(rng, words_for(l).size())]});

    // Quality k in 0..5 fixes how many of the 9 slots the candidate gets
    // right; the rest get a different surface of the same label.
    const int k = static_cast<int>(below(rng, 6));
    const std::size_t right = static_cast<std::size_t>(std::lround(k * 9.0 / 5.0));
    std::vector<std::size_t> order(truth.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t n = order.size(); n > 1; --n) std::swap(order[n - 1], order[below(rng, n)]);
    std::vector<SlotPlan> cand = truth;
    for (std::size_t j = right; j < order.size(); ++j) {
      auto& slot = cand[order[j]];
      const auto& words = words_for(slot.label);
      std::string w;
      do {
        w = words[below(rng, words.size())];
      } while (w == slot.surface);
      slot.surface = w;
    }

    AnnotationSet ref_set, cand_set;
    ref_set.report_id = "ref" + std::to_string(i);
    cand_set.report_id = "cand" + std::to_string(i);
    add_slots(ref_set, truth, rng);
    add_distractors(ref_set, rng);
    add_slots(cand_set, cand, rng);
    add_distractors(cand_set, rng);
    ref_corpus.add(ref_set);
    cand_corpus.add(cand_set);
    quality.push_back({cand_set.report_id, k});
    manifest << ref_set.report_id << ',' << cand_set.report_id << '\n';
  }
  std::ostringstream ref_s, cand_s, expert_s;
  write_annotations(ref_s, ref_corpus);
  write_annotations(cand_s, cand_corpus);
  write_expert_scores(expert_s, quality);
  const auto ref = dir.write("ref.jsonl", ref_s.str());
  const auto cand = dir.write("cand.jsonl", cand_s.str());
  const auto expert = dir.write("expert.csv", expert_s.str());
  const auto m = dir.write("manifest.csv", manifest.str());
  const auto values = (dir.path() / "values.csv").string();
  const auto rows = (dir.path() / "rows.jsonl").string();
  const int code = run_cli("ablate --extractor external --ref-annotations " + ref + " --cand-annotations " + cand +
                               " --manifest " + m + " --expert " + expert +
                               " --exclude-zero=false --format jsonl --out " + rows + " --metrics-out " + values,
                           dir);
  if (code != 0) return {false, "hare ablate exited with " + std::to_string(code)};

  std::map<std::string, double> r;
  for (const auto& rec : read_jsonl(rows)) {
    if (rec.contains("metric")) r[rec["metric"]] = rec["pearson_r"].get<double>();
  }
  if (r.size() != 3) return {false, "expected three variant rows, got " + std::to_string(r.size())};
  const double thr = r.at("threshold_0.7"), none = r.at("no_threshold"), inv = r.at("inverted");
  // Independent recomputation from the per-pair variant scores.
  std::ifstream vin(values);
  const auto table = hare::stats::read_metric_table(vin);
  std::vector<double> q;
  for (const auto& e : quality) q.push_back(e.score);
  double drift = 0.0;
  for (std::size_t c = 0; c < table.names.size(); ++c) {
    drift = std::max(drift, std::fabs(hare::testing::pearson_oracle(table.columns[c], q) - r.at(table.names[c])));
  }
  const bool pass = thr > none && none > inv && inv < 0.2 && drift <= 1e-9;
  return {pass, "200 reports, r(threshold_0.7)=" + fmt(thr) + " > r(no_threshold)=" + fmt(none) +
                    " > r(inverted)=" + fmt(inv) + ", r(inverted) < 0.2, oracle drift " + fmt(drift)};
}

// ---- Prep ratios ----------------------------------------------------------------

struct PrepReport {
  Report report;
  AnnotationSet gold;
  std::size_t candidates = 0;  // unannotated same-sentence compatible ordered pairs
};

PrepReport make_prep_report(std::mt19937_64& rng, const std::string& id, bool long_sentence) {
  PrepReport p;
  p.report.id = id;
  p.gold.report_id = id;
  p.gold.source = Source::gold;
  std::string& text = p.report.text;
  auto append = [&](const std::string& s, std::optional<Label> label) -> std::size_t {
    const std::size_t start = hare::text::utf8_length(text);
    text += s;
    if (!label) return 0;
    p.gold.entities.push_back({start, start + hare::text::utf8_length(s), *label, s, 1.0});
    return p.gold.entities.size() - 1;
  };
  const std::size_t sentences = 2 + below(rng, 4);
  for (std::size_t s = 0; s < sentences; ++s) {
    if (s) text += ' ';
    if (below(rng, 3) == 0) {
      const auto d = append("Invasive carcinoma", Label::pathological_diagnosis);
      text += ", ";
      const auto q = append("poorly differentiated", Label::diagnosis_descriptor);
      text += '.';
      if (below(rng, 2)) {
        p.gold.relations.push_back({d, q, RelationType::diagnosis_descriptor, 1.0});
      } else {
        ++p.candidates;
      }
      continue;
    }
    const auto& markers = words_for(Label::ihc_marker);
    const std::size_t m = 1 + below(rng, 4);
    std::size_t linked = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k) text += ", ";
      const auto h = append(markers[below(rng, markers.size())], Label::ihc_marker);
      text += ' ';
      const auto t = append(below(rng, 2) ? "positive" : "negative", Label::ihc_modifier);
      if (below(rng, 3) == 0) {
        p.gold.relations.push_back({h, t, RelationType::marker_modifier, 1.0});
        ++linked;
      }
    }
    text += '.';
    p.candidates += m * m - linked;
  }
  if (long_sentence) {
    text += " Note";
    const std::size_t words = 600 + below(rng, 600);
    for (std::size_t w = 0; w < words; ++w) text += w % 7 == 6 ? ", tissue" : " section";
    text += '.';
  }
  return p;
}

Outcome prep_ratios() {
  std::mt19937_64 rng(5005);
  TempDir dir;
  std::vector<PrepReport> reports;
  for (int i = 0; i < 50; ++i) reports.push_back(make_prep_report(rng, "p" + std::to_string(i), i % 10 == 3));
  std::vector<Report> rs;
  AnnotationCorpus gold;
  for (const auto& p : reports) {
    rs.push_back(p.report);
    gold.add(p.gold);
  }
  std::ostringstream r_out, g_out;
  write_reports(r_out, rs);
  write_annotations(g_out, gold);
  const auto rpath = dir.write("reports.jsonl", r_out.str());
  const auto gpath = dir.write("gold.jsonl", g_out.str());

  std::size_t exact = 0, capped = 0, violations = 0, chunks = 0, max_tokens = 0, long_sentences = 0;
  for (const auto& [mode, ratio] : {std::pair<std::string, std::size_t>{"train", 1}, {"test", 3}}) {
    const auto out = (dir.path() / mode).string();
    const int code = run_cli("prep --reports " + rpath + " --gold " + gpath + " --mode " + mode + " --seed 9 --out " + out,
                             dir);
    if (code != 0) return {false, "hare prep exited with " + std::to_string(code)};
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // positives, negatives
    for (const auto& rec : read_jsonl(out + "/pairs.jsonl")) {
      if (!rec.contains("label")) continue;
      auto& c = counts[rec["origin_report"]];
      (rec["label"] == "NEGATIVE" ? c.second : c.first)++;
    }
    for (const auto& p : reports) {
      const std::size_t pos = p.gold.relations.size();
      const auto c = counts[p.report.id];
      if (c.first != pos) ++violations;
      if (pos == 0) {
        if (c.second != 0) ++violations;
        continue;
      }
      if (p.candidates >= ratio * pos) {
        ++exact;
        if (c.second != ratio * pos) ++violations;
      } else {
        ++capped;
        if (c.second != p.candidates) ++violations;
      }
    }
    for (const auto& rec : read_jsonl(out + "/chunks.jsonl")) {
      if (!rec.contains("tokens")) continue;
      const std::size_t n = hare::text::tokenize(rec["text"].get<std::string>()).size();
      if (n != rec["tokens"].get<std::size_t>() || n > 512) ++violations;
      if (rec["chunk"].get<std::size_t>() > 0) ++long_sentences;
      max_tokens = std::max(max_tokens, n);
      ++chunks;
    }
  }
  return {violations == 0 && exact > 0 && long_sentences > 0,
          "50 reports x 2 modes: " + std::to_string(exact) + " at exact 1:1 / 1:3 ratio, " + std::to_string(capped) +
              " capped at available candidates, " + std::to_string(chunks) + " chunks (max " +
              std::to_string(max_tokens) + " tokens, " + std::to_string(long_sentences) +
              " continuation chunks), " + std::to_string(violations) + " violations"};
}

// ---- Throughput -----------------------------------------------------------------

Outcome throughput() {
  std::mt19937_64 rng(6006);
  TempDir dir;
  const auto fixtures = load_reports(std::string(HARE_DATA_DIR) + "/fixtures/reports.jsonl");
  std::vector<std::string> sentences;
  for (const auto& r : fixtures) {
    const hare::text::Utf8Index idx(r.text);
    for (const auto& s : hare::text::split_sentences(r.text)) sentences.emplace_back(idx.slice(r.text, s));
  }
  std::vector<Report> reports;
  std::ostringstream manifest;
  manifest << "ref_id,cand_id\n";
  for (int i = 0; i < 600; ++i) {
    for (const char* side : {"ref", "cand"}) {
      Report r{std::string(side) + std::to_string(i), ""};
      const std::size_t n = 3 + below(rng, 5);
      for (std::size_t k = 0; k < n; ++k) r.text += (k ? " " : "") + sentences[below(rng, sentences.size())];
      reports.push_back(std::move(r));
    }
    manifest << "ref" << i << ",cand" << i << '\n';
  }
  std::ostringstream rs;
  write_reports(rs, reports);
  const auto rpath = dir.write("reports.jsonl", rs.str());
  const auto mpath = dir.write("manifest.csv", manifest.str());
  const auto serial = (dir.path() / "serial.jsonl").string();
  const auto parallel = (dir.path() / "parallel.jsonl").string();

  const auto t0 = std::chrono::steady_clock::now();
  int code = run_cli("batch --jobs 1 --reports " + rpath + " --manifest " + mpath + " --out " + serial, dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (code != 0) return {false, "hare batch exited with " + std::to_string(code)};
  code = run_cli("batch --jobs 8 --reports " + rpath + " --manifest " + mpath + " --out " + parallel, dir);
  if (code != 0) return {false, "hare batch --jobs 8 exited with " + std::to_string(code)};
  const auto a = hare::testing::read_file(serial);
  const auto b = hare::testing::read_file(parallel);
  const auto records = read_jsonl(serial);
  const bool pass = secs < 60.0 && a == b && records.size() == 602;
  return {pass, "600 pairs (gazetteer + hashed) in " + fmt(secs) + " s single-threaded, " +
                    std::to_string(records.size() - 2) + " records, jobs 8 output " +
                    (a == b ? "byte-identical" : "DIFFERS")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {"formula_oracle", 5, formula_oracle},
      {"identity_suite", 10, identity_suite},
      {"statistics_oracle", 30, statistics_oracle},
      {"threshold_partition", 30, threshold_partition},
      {"ablation_ordering", 60, ablation_ordering},
      {"prep_ratios", 60, prep_ratios},
      {"throughput", 120, throughput},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.budget_s) + " s budget";
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " [" << fmt(secs) << " s]"
              << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
