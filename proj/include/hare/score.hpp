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

// The HARE score: confidence filtering, max-cosine entity alignment,
// soft one-to-one relation matching, and the composite F1_e + F1_r.

#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hare/corpus.hpp"
#include "hare/embed.hpp"
#include "hare/error.hpp"
#include "hare/extract.hpp"

namespace hare::score {

using corpus::AnnotationSet;
using corpus::RelationInstance;

enum class ThresholdMode { at_or_above, below, none };

// How relation endpoints correspond across reports. `exact` compares
// normalized surfaces instead of embeddings.
enum class RelationMatching { soft, exact };

struct ScoringConfig {
  double entity_threshold = 0.7;
  double relation_threshold = 0.7;
  ThresholdMode threshold_mode = ThresholdMode::at_or_above;
  double relation_align_tau = 0.7;
  RelationMatching relation_matching = RelationMatching::soft;

  void validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(entity_threshold) || !unit(relation_threshold) || !unit(relation_align_tau)) {
      throw ConfigError("scoring thresholds must lie in [0,1]");
    }
  }
};

// Rows are reference entities, columns candidate entities; every cell is a
// clamped cosine in [0,1].
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> cells)
      : rows_(rows), cols_(cols), cells_(std::move(cells)) {
    if (cells_.size() != rows_ * cols_) throw std::invalid_argument("similarity matrix: size mismatch");
    for (double c : cells_) {
      if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("similarity matrix: cell outside [0,1]");
    }
  }

  static SimilarityMatrix from_vectors(std::span<const embed::EmbeddingVector> ref,
                                       std::span<const embed::EmbeddingVector> cand) {
    std::vector<double> cells;
    cells.reserve(ref.size() * cand.size());
    for (const auto& r : ref) {
      for (const auto& c : cand) cells.push_back(embed::cosine_clamped(r, c));
    }
    return SimilarityMatrix(ref.size(), cand.size(), std::move(cells));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }

  SimilarityMatrix transposed() const {
    std::vector<double> t(cells_.size());
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols_; ++c) t[c * rows_ + r] = cells_[r * cols_ + c];
    }
    return SimilarityMatrix(cols_, rows_, std::move(t));
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> cells_;
};

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const PRF&, const PRF&) = default;
};

inline double harmonic_mean(double p, double r) {
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

// Recall averages each reference entity's best match over candidates;
// precision averages each candidate's best match over references. Both
// sides empty scores (1,1,1); exactly one empty side scores (0,0,0).
inline PRF entity_prf(const SimilarityMatrix& s) {
  if (s.rows() == 0 && s.cols() == 0) return {1.0, 1.0, 1.0};
  if (s.rows() == 0 || s.cols() == 0) return {0.0, 0.0, 0.0};
  double recall = 0.0;
  for (std::size_t r = 0; r < s.rows(); ++r) {
    double best = 0.0;
    for (std::size_t c = 0; c < s.cols(); ++c) best = std::max(best, s(r, c));
    recall += best;
  }
  recall /= static_cast<double>(s.rows());
  double precision = 0.0;
  for (std::size_t c = 0; c < s.cols(); ++c) {
    double best = 0.0;
    for (std::size_t r = 0; r < s.rows(); ++r) best = std::max(best, s(r, c));
    precision += best;
  }
  precision /= static_cast<double>(s.cols());
  return {precision, recall, harmonic_mean(precision, recall)};
}

struct RelationPair {
  std::size_t ref = 0;
  std::size_t cand = 0;
  double score = 0.0;  // min(head similarity, tail similarity)

  friend bool operator==(const RelationPair&, const RelationPair&) = default;
};

// Greedy one-to-one matching. A pair is admissible when the relation types
// agree and both endpoint similarities reach tau; admissible pairs are
// taken by descending score, ties by (ref index, cand index).
// `entity_similarity(ref_entity, cand_entity)` indexes the entity lists the
// relations refer to.
template <typename Similarity>
std::vector<RelationPair> match_relations(std::span<const RelationInstance> ref,
                                          std::span<const RelationInstance> cand,
                                          Similarity&& entity_similarity, double tau) {
  std::vector<RelationPair> admissible;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    for (std::size_t j = 0; j < cand.size(); ++j) {
      if (ref[i].type != cand[j].type) continue;
      const double head = entity_similarity(ref[i].head, cand[j].head);
      const double tail = entity_similarity(ref[i].tail, cand[j].tail);
      if (head >= tau && tail >= tau) admissible.push_back({i, j, std::min(head, tail)});
    }
  }
  std::stable_sort(admissible.begin(), admissible.end(),
                   [](const RelationPair& a, const RelationPair& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.ref != b.ref ? a.ref < b.ref : a.cand < b.cand;
                   });
  std::vector<bool> ref_used(ref.size(), false);
  std::vector<bool> cand_used(cand.size(), false);
  std::vector<RelationPair> matched;
  for (const RelationPair& p : admissible) {
    if (ref_used[p.ref] || cand_used[p.cand]) continue;
    ref_used[p.ref] = cand_used[p.cand] = true;
    matched.push_back(p);
  }
  return matched;
}

inline PRF relation_prf(std::size_t matched, std::size_t n_ref, std::size_t n_cand) {
  if (n_ref == 0 && n_cand == 0) return {1.0, 1.0, 1.0};
  if (n_ref == 0 || n_cand == 0) return {0.0, 0.0, 0.0};
  if (matched > std::min(n_ref, n_cand)) {
    throw std::invalid_argument("relation_prf: more matches than relations");
  }
  const double p = static_cast<double>(matched) / static_cast<double>(n_cand);
  const double r = static_cast<double>(matched) / static_cast<double>(n_ref);
  return {p, r, harmonic_mean(p, r)};
}

struct Counts {
  std::size_t ref_entities = 0;
  std::size_t cand_entities = 0;
  std::size_t ref_relations = 0;
  std::size_t cand_relations = 0;

  friend bool operator==(const Counts&, const Counts&) = default;
};

struct HareBreakdown {
  double precision_e = 0.0;
  double recall_e = 0.0;
  double f1_e = 0.0;
  double precision_r = 0.0;
  double recall_r = 0.0;
  double f1_r = 0.0;
  double hare = 0.0;  // f1_e + f1_r, in [0,2]
  Counts counts;      // after filtering
  std::size_t embedder_misses = 0;

  friend bool operator==(const HareBreakdown&, const HareBreakdown&) = default;
};

inline AnnotationSet apply_threshold(const AnnotationSet& set, const ScoringConfig& cfg) {
  switch (cfg.threshold_mode) {
    case ThresholdMode::at_or_above:
      return extract::filter_by_confidence(set, cfg.entity_threshold, cfg.relation_threshold,
                                           extract::FilterMode::keep_at_or_above);
    case ThresholdMode::below:
      return extract::filter_by_confidence(set, cfg.entity_threshold, cfg.relation_threshold,
                                           extract::FilterMode::keep_below);
    case ThresholdMode::none:
      break;
  }
  return set;
}

namespace detail {

inline std::vector<embed::EmbeddingVector> embed_all(const AnnotationSet& set,
                                                     const embed::Embedder& embedder,
                                                     std::size_t& misses) {
  std::vector<embed::EmbeddingVector> out;
  out.reserve(set.entities.size());
  for (const auto& e : set.entities) {
    out.push_back(embedder.embed({set.report_id, e.start, e.end, e.surface}, misses));
  }
  return out;
}

}  // namespace detail

inline HareBreakdown hare_score(const AnnotationSet& ref_in, const AnnotationSet& cand_in,
                                const embed::Embedder& embedder, const ScoringConfig& cfg) {
  cfg.validate();
  const AnnotationSet ref = apply_threshold(ref_in, cfg);
  const AnnotationSet cand = apply_threshold(cand_in, cfg);

  HareBreakdown out;
  std::vector<embed::EmbeddingVector> ref_vecs;
  std::vector<embed::EmbeddingVector> cand_vecs;
  try {
    ref_vecs = detail::embed_all(ref, embedder, out.embedder_misses);
    cand_vecs = detail::embed_all(cand, embedder, out.embedder_misses);
  } catch (const DataError& e) {
    throw DataError("scoring reference '" + ref.report_id + "' against candidate '" +
                    cand.report_id + "': " + e.what());
  }

  const SimilarityMatrix sim = SimilarityMatrix::from_vectors(ref_vecs, cand_vecs);
  const PRF ent = entity_prf(sim);

  std::vector<RelationPair> matched;
  if (cfg.relation_matching == RelationMatching::soft) {
    matched = match_relations(
        ref.relations, cand.relations, [&](std::size_t r, std::size_t c) { return sim(r, c); },
        cfg.relation_align_tau);
  } else {
    std::vector<std::string> ref_keys;
    std::vector<std::string> cand_keys;
    for (const auto& e : ref.entities) ref_keys.push_back(embed::normalize_key(e.surface));
    for (const auto& e : cand.entities) cand_keys.push_back(embed::normalize_key(e.surface));
    matched = match_relations(
        ref.relations, cand.relations,
        [&](std::size_t r, std::size_t c) { return ref_keys[r] == cand_keys[c] ? 1.0 : 0.0; }, 1.0);
  }
  const PRF rel = relation_prf(matched.size(), ref.relations.size(), cand.relations.size());

  out.precision_e = ent.precision;
  out.recall_e = ent.recall;
  out.f1_e = ent.f1;
  out.precision_r = rel.precision;
  out.recall_r = rel.recall;
  out.f1_r = rel.f1;
  out.hare = ent.f1 + rel.f1;
  out.counts = {ref.entities.size(), cand.entities.size(), ref.relations.size(),
                cand.relations.size()};
  return out;
}

inline std::string format_threshold(double t) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, t);
  return std::string(buf, p);
}

// Variant names, in output order: thresholded, unthresholded, inverted.
inline std::vector<std::string> ablation_variants(const ScoringConfig& base) {
  return {"threshold_" + format_threshold(base.entity_threshold), "no_threshold", "inverted"};
}

inline std::vector<ScoringConfig> ablation_configs(const ScoringConfig& base) {
  std::vector<ScoringConfig> cfgs(3, base);
  cfgs[0].threshold_mode = ThresholdMode::at_or_above;
  cfgs[1].threshold_mode = ThresholdMode::none;
  cfgs[2].threshold_mode = ThresholdMode::below;
  return cfgs;
}

inline std::vector<std::pair<std::string, HareBreakdown>> ablate(const AnnotationSet& ref,
                                                                 const AnnotationSet& cand,
                                                                 const embed::Embedder& embedder,
                                                                 const ScoringConfig& base) {
  const auto names = ablation_variants(base);
  const auto cfgs = ablation_configs(base);
  std::vector<std::pair<std::string, HareBreakdown>> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    out.emplace_back(names[i], hare_score(ref, cand, embedder, cfgs[i]));
  }
  return out;
}

inline nlohmann::ordered_json to_json(const std::string& report_id, const HareBreakdown& b) {
  nlohmann::ordered_json rec;
  rec["report_id"] = report_id;
  rec["precision_e"] = b.precision_e;
  rec["recall_e"] = b.recall_e;
  rec["f1_e"] = b.f1_e;
  rec["precision_r"] = b.precision_r;
  rec["recall_r"] = b.recall_r;
  rec["f1_r"] = b.f1_r;
  rec["hare"] = b.hare;
  rec["counts"] = {{"ref_entities", b.counts.ref_entities},
                   {"cand_entities", b.counts.cand_entities},
                   {"ref_relations", b.counts.ref_relations},
                   {"cand_relations", b.counts.cand_relations},
                   {"embedder_misses", b.embedder_misses}};
  return rec;
}

}  // namespace hare::score
