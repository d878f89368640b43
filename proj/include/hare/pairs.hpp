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

// Relation-extraction sample construction: every annotated relation becomes
// a positive sample with entity markers, and type-compatible unannotated
// pairs from the same sentence are sampled as negatives.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hare/corpus.hpp"
#include "hare/error.hpp"
#include "hare/random.hpp"
#include "hare/text.hpp"

namespace hare::corpus {

inline constexpr std::string_view kE1Open = "[E1] ";
inline constexpr std::string_view kE1Close = " [/E1]";
inline constexpr std::string_view kE2Open = "[E2] ";
inline constexpr std::string_view kE2Close = " [/E2]";
inline constexpr std::string_view kNegativeLabel = "NEGATIVE";

enum class PairMode { train, test };

// Negatives per positive.
inline std::size_t negative_ratio(PairMode mode) { return mode == PairMode::train ? 1 : 3; }

struct MarkedPairSample {
  std::string text_with_markers;
  text::Span head_span;  // code points of the head surface inside the marked text
  text::Span tail_span;
  std::string label;  // relation type name or NEGATIVE
  std::string origin_report;

  friend bool operator==(const MarkedPairSample&, const MarkedPairSample&) = default;
};

struct RelationPairs {
  std::vector<MarkedPairSample> samples;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  // Negatives requested by the ratio but not available.
  std::size_t shortfall = 0;
};

namespace detail {

inline std::size_t sentence_of(const std::vector<text::Span>& sentences, std::size_t pos) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].start <= pos) best = i;
  }
  return best;
}

inline MarkedPairSample mark_pair(const Report& report, const text::Utf8Index& index,
                                  const std::vector<text::Span>& sentences,
                                  const std::vector<std::size_t>& entity_sentence,
                                  const EntityMention& head, std::size_t head_idx,
                                  const EntityMention& tail, std::size_t tail_idx,
                                  std::string label) {
  const std::size_t s0 = std::min(entity_sentence[head_idx], entity_sentence[tail_idx]);
  const std::size_t s1 = std::max(entity_sentence[head_idx], entity_sentence[tail_idx]);
  const text::Span window{std::min({sentences[s0].start, head.start, tail.start}),
                          std::max({sentences[s1].end, head.end, tail.end})};
  const std::string_view source = index.slice(report.text, window);
  for (auto marker : {"[E1]", "[/E1]", "[E2]", "[/E2]"}) {
    if (source.find(marker) != std::string_view::npos) {
      throw DataError("report '" + report.id + "' already contains entity marker " + marker);
    }
  }

  struct Insert {
    std::size_t pos;
    int order;  // closers before openers at the same offset
    std::string_view marker;
    text::Span* target;
    bool open;
  };
  MarkedPairSample sample;
  std::vector<Insert> inserts = {
      {head.start, 1, kE1Open, &sample.head_span, true},
      {head.end, 0, kE1Close, &sample.head_span, false},
      {tail.start, 1, kE2Open, &sample.tail_span, true},
      {tail.end, 0, kE2Close, &sample.tail_span, false},
  };
  std::stable_sort(inserts.begin(), inserts.end(), [](const Insert& a, const Insert& b) {
    return a.pos != b.pos ? a.pos < b.pos : a.order < b.order;
  });

  std::string out;
  std::size_t out_cps = 0;
  std::size_t cursor = window.start;
  for (const Insert& ins : inserts) {
    const std::string_view piece = index.slice(report.text, {cursor, ins.pos});
    out += piece;
    out_cps += ins.pos - cursor;
    cursor = ins.pos;
    if (ins.open) {
      out += ins.marker;
      out_cps += ins.marker.size();
      ins.target->start = out_cps;
    } else {
      ins.target->end = out_cps;
      out += ins.marker;
      out_cps += ins.marker.size();
    }
  }
  out += index.slice(report.text, {cursor, window.end});
  sample.text_with_markers = std::move(out);
  sample.label = std::move(label);
  sample.origin_report = report.id;
  return sample;
}

}  // namespace detail

// Positives come first in annotation order, then negatives in sampling
// order. The output is a pure function of the arguments.
inline RelationPairs build_relation_pairs(const AnnotationSet& annots, const Report& report,
                                          PairMode mode, std::uint64_t seed) {
  RelationPairs result;
  if (annots.relations.empty()) return result;

  const text::Utf8Index index(report.text);
  const std::vector<text::Span> sentences = text::split_sentences(report.text);
  if (sentences.empty()) return result;
  std::vector<std::size_t> entity_sentence;
  entity_sentence.reserve(annots.entities.size());
  for (const EntityMention& e : annots.entities) {
    if (e.end > index.size()) {
      throw DataError("report '" + report.id + "': entity span out of bounds");
    }
    entity_sentence.push_back(detail::sentence_of(sentences, e.start));
  }

  std::set<std::pair<std::size_t, std::size_t>> annotated;
  for (const RelationInstance& r : annots.relations) {
    if (r.head >= annots.entities.size() || r.tail >= annots.entities.size()) {
      throw DataError("report '" + report.id + "': relation index out of range");
    }
    annotated.emplace(std::min(r.head, r.tail), std::max(r.head, r.tail));
    result.samples.push_back(detail::mark_pair(report, index, sentences, entity_sentence,
                                               annots.entities[r.head], r.head,
                                               annots.entities[r.tail], r.tail,
                                               std::string(to_string(r.type))));
  }
  result.positives = annots.relations.size();

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t h = 0; h < annots.entities.size(); ++h) {
    for (std::size_t t = 0; t < annots.entities.size(); ++t) {
      if (h == t || entity_sentence[h] != entity_sentence[t]) continue;
      if (!relation_type_for(annots.entities[h].label, annots.entities[t].label)) continue;
      if (annotated.count({std::min(h, t), std::max(h, t)})) continue;
      candidates.emplace_back(h, t);
    }
  }

  const std::size_t wanted = result.positives * negative_ratio(mode);
  const std::size_t take = std::min(wanted, candidates.size());
  result.shortfall = wanted - take;

  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
    const auto [h, t] = candidates[i];
    result.samples.push_back(detail::mark_pair(report, index, sentences, entity_sentence,
                                               annots.entities[h], h, annots.entities[t], t,
                                               std::string(kNegativeLabel)));
  }
  result.negatives = take;
  return result;
}

inline nlohmann::ordered_json to_json(const MarkedPairSample& s) {
  nlohmann::ordered_json rec;
  rec["origin_report"] = s.origin_report;
  rec["label"] = s.label;
  rec["text"] = s.text_with_markers;
  rec["head"] = {s.head_span.start, s.head_span.end};
  rec["tail"] = {s.tail_span.start, s.tail_span.end};
  return rec;
}

}  // namespace hare::corpus
