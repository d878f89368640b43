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

#include "hare/extract.hpp"

#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

namespace {

using namespace hare::corpus;
using namespace hare::extract;

Gazetteer make_gazetteer(std::initializer_list<std::pair<Label, const char*>> entries) {
  Gazetteer g;
  for (const auto& [label, entry] : entries) g.add(label, entry);
  return g;
}

TEST(TagEntities, DirectLexiconHit) {
  const auto gaz = make_gazetteer({{Label::ihc_marker, "cd20"}});
  const auto out = tag_entities({"r", "CD20 positive"}, gaz);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], (EntityMention{0, 4, Label::ihc_marker, "CD20", 1.0}));
}

TEST(TagEntities, LongestMatchWins) {
  const auto gaz = make_gazetteer({{Label::anatomical_site, "lymph"}, {Label::anatomical_site, "lymph node"}});
  const auto out = tag_entities({"r", "left axillary lymph node"}, gaz);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].surface, "lymph node");
  EXPECT_EQ(out[0].start, 14u);
  EXPECT_EQ(out[0].end, 24u);
}

TEST(TagEntities, EmptyLexicon) { EXPECT_TRUE(tag_entities({"r", "CD20 positive"}, Gazetteer{}).empty()); }

TEST(TagEntities, MatchesWholeTokensOnly) {
  const auto gaz = make_gazetteer({{Label::ihc_marker, "er"}});
  EXPECT_TRUE(tag_entities({"r", "tumour paper"}, gaz).empty());
  EXPECT_EQ(tag_entities({"r", "(ER) positive"}, gaz).size(), 1u);
}

TEST(TagEntities, WhitespaceAndCaseInsensitive) {
  const auto gaz = make_gazetteer({{Label::pathological_diagnosis, "Hodgkin   LYMPHOMA"}});
  const auto out = tag_entities({"r", "classical hodgkin\nlymphoma."}, gaz);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].surface, "hodgkin\nlymphoma");
}

TEST(TagEntities, EqualLengthTieUsesLabelPriority) {
  auto gaz = make_gazetteer({{Label::ihc_modifier, "high grade"}, {Label::diagnosis_descriptor, "high grade"}});
  gaz.set_priority({Label::ihc_modifier});
  auto out = tag_entities({"r", "high grade"}, gaz);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].label, Label::ihc_modifier);
  gaz.set_priority({Label::diagnosis_descriptor});
  out = tag_entities({"r", "high grade"}, gaz);
  EXPECT_EQ(out[0].label, Label::diagnosis_descriptor);
}

TEST(TagEntities, EqualLengthOverlapPrefersLeftmost) {
  const auto gaz = make_gazetteer({{Label::anatomical_site, "aa bb"}, {Label::anatomical_site, "bb cc"}});
  const auto out = tag_entities({"r", "aa bb cc"}, gaz);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].surface, "aa bb");
}

TEST(Gazetteer, LoadsBundledDirectory) {
  const auto gaz = Gazetteer::load(std::string(HARE_DATA_DIR) + "/gazetteer");
  EXPECT_GT(gaz.size(), 100u);
  EXPECT_EQ(gaz.priority().front(), Label::pathological_diagnosis);
  const auto out = tag_entities({"r", "Left axillary lymph node: classical Hodgkin lymphoma. CD30 strongly positive."}, gaz);
  std::vector<std::string> surfaces;
  for (const auto& e : out) surfaces.push_back(e.surface);
  EXPECT_EQ(surfaces, (std::vector<std::string>{"Left axillary lymph node", "classical Hodgkin lymphoma",
                                                "CD30", "strongly positive"}));
}

TEST(Gazetteer, CommentsAndFileLayout) {
  hare::testing::TempDir dir;
  dir.write("ihc_marker.txt", "# comment line\nCD20\n\n  cd3  \n");
  dir.write("ihc_modifier/a.txt", "positive\n");
  const auto gaz = Gazetteer::load(dir.path());
  EXPECT_EQ(gaz.size(), 3u);
  dir.write("bogus/x.txt", "y\n");
  EXPECT_THROW(Gazetteer::load(dir.path()), hare::ConfigError);
  EXPECT_THROW(Gazetteer::load(dir.path() / "missing"), hare::ConfigError);
}

TEST(TagEntities, PropertyNonOverlappingAndGrowthKeepsLongestMatches) {
  std::mt19937_64 rng(99);
  const std::vector<std::string> vocab = {"aa", "bb", "cc", "dd", "ee"};
  auto phrase = [&](std::size_t len) {
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += (i ? " " : "") + vocab[hare::testing::below(rng, vocab.size())];
    return s;
  };
  for (int trial = 0; trial < 300; ++trial) {
    const Report report{"r", phrase(5 + hare::testing::below(rng, 20))};
    Gazetteer gaz;
    for (int i = 0; i < 4; ++i) gaz.add(kAllLabels[hare::testing::below(rng, 5)], phrase(1 + hare::testing::below(rng, 3)));
    const auto before = tag_entities(report, gaz);
    for (std::size_t i = 1; i < before.size(); ++i) ASSERT_LE(before[i - 1].end, before[i].start);

    gaz.add(kAllLabels[hare::testing::below(rng, 5)], phrase(1 + hare::testing::below(rng, 3)));
    const auto after = tag_entities(report, gaz);
    for (std::size_t i = 1; i < after.size(); ++i) ASSERT_LE(after[i - 1].end, after[i].start);
    // A match that disappears must be overlapped by one at least as long
    // (strictly longer, or an equal-length tie resolved by priority/position).
    for (const auto& old : before) {
      if (std::find(after.begin(), after.end(), old) != after.end()) continue;
      bool superseded = false;
      for (const auto& e : after) {
        if (e.start < old.end && old.start < e.end && e.end - e.start >= old.end - old.start) superseded = true;
      }
      ASSERT_TRUE(superseded) << report.text;
    }
  }
}

std::vector<EntityMention> entities_for(const std::string& text,
                                        std::initializer_list<std::pair<const char*, Label>> items) {
  std::vector<EntityMention> out;
  std::size_t from = 0;
  for (const auto& [surface, label] : items) {
    const std::size_t pos = text.find(surface, from);
    out.push_back({pos, pos + std::string(surface).size(), label, surface, 1.0});
    from = pos + 1;
  }
  return out;
}

TEST(LinkRelations, LinearConfidenceDecay) {
  const Report r{"r", "ER strongly positive"};
  const auto ents = entities_for(r.text, {{"ER", Label::ihc_marker}, {"strongly", Label::ihc_modifier}});
  const auto rels = link_relations(r, ents, LinkerConfig{});
  ASSERT_EQ(rels.size(), 1u);
  EXPECT_EQ(rels[0].head, 0u);
  EXPECT_EQ(rels[0].tail, 1u);
  EXPECT_DOUBLE_EQ(rels[0].confidence, 0.95);
  EXPECT_EQ(rels[0].type, RelationType::marker_modifier);
}

TEST(LinkRelations, SentenceBoundaryBlocks) {
  const Report r{"r", "ER is noted. Strongly positive staining."};
  const auto ents = entities_for(r.text, {{"ER", Label::ihc_marker}, {"Strongly", Label::ihc_modifier}});
  EXPECT_TRUE(link_relations(r, ents, LinkerConfig{}).empty());
}

TEST(LinkRelations, EquidistantTieGoesLeftmost) {
  const Report r{"r", "CD20 positive CD3"};
  const auto ents = entities_for(r.text, {{"CD20", Label::ihc_marker},
                                          {"positive", Label::ihc_modifier},
                                          {"CD3", Label::ihc_marker}});
  const auto rels = link_relations(r, ents, LinkerConfig{});
  ASSERT_EQ(rels.size(), 1u);
  EXPECT_EQ(rels[0].head, 0u);
}

TEST(LinkRelations, WindowLimitsAndDiagnosisType) {
  const Report r{"r", "Findings consistent with a b c d e f lymphoma"};
  const auto ents = entities_for(r.text, {{"consistent with", Label::diagnosis_descriptor},
                                          {"lymphoma", Label::pathological_diagnosis}});
  LinkerConfig narrow;
  narrow.window = 3;
  EXPECT_TRUE(link_relations(r, ents, narrow).empty());
  const auto rels = link_relations(r, ents, LinkerConfig{});
  ASSERT_EQ(rels.size(), 1u);
  EXPECT_EQ(rels[0].head, 1u);
  EXPECT_EQ(rels[0].tail, 0u);
  EXPECT_EQ(rels[0].type, RelationType::diagnosis_descriptor);
  EXPECT_DOUBLE_EQ(rels[0].confidence, 1.0 - 7.0 / 20.0);
}

TEST(LinkRelations, PropertyConfidenceInRangeAndDecreasing) {
  for (std::size_t gap = 0; gap < 30; ++gap) {
    std::string text = "ER";
    for (std::size_t i = 0; i < gap; ++i) text += " x";
    text += " weak";
    const Report r{"r", text};
    std::vector<EntityMention> ents = {{0, 2, Label::ihc_marker, "ER", 1.0},
                                       {text.size() - 4, text.size(), Label::ihc_modifier, "weak", 1.0}};
    const auto rels = link_relations(r, ents, LinkerConfig{});
    if (gap + 1 > 20) {
      EXPECT_TRUE(rels.empty());
      continue;
    }
    ASSERT_EQ(rels.size(), 1u);
    EXPECT_GE(rels[0].confidence, 0.0);
    EXPECT_LE(rels[0].confidence, 1.0);
    EXPECT_DOUBLE_EQ(rels[0].confidence, 1.0 - static_cast<double>(gap + 1) / 20.0);
  }
}

AnnotationSet three_entities() {
  AnnotationSet a;
  a.report_id = "r";
  a.entities = {{0, 2, Label::ihc_marker, "ER", 0.9},
                {3, 11, Label::ihc_modifier, "strongly", 0.7},
                {12, 14, Label::ihc_marker, "PR", 0.5}};
  a.relations = {{0, 1, RelationType::marker_modifier, 0.95}, {2, 1, RelationType::marker_modifier, 0.9}};
  return a;
}

TEST(FilterByConfidence, AtOrAboveIsInclusive) {
  const auto out = filter_by_confidence(three_entities(), 0.7, FilterMode::keep_at_or_above);
  ASSERT_EQ(out.entities.size(), 2u);
  EXPECT_EQ(out.entities[0].surface, "ER");
  EXPECT_EQ(out.entities[1].surface, "strongly");
  // PR was removed, so its relation is dropped; the survivor is remapped.
  ASSERT_EQ(out.relations.size(), 1u);
  EXPECT_EQ(out.relations[0].head, 0u);
  EXPECT_EQ(out.relations[0].tail, 1u);
}

TEST(FilterByConfidence, BelowIsComplement) {
  const auto out = filter_by_confidence(three_entities(), 0.7, FilterMode::keep_below);
  ASSERT_EQ(out.entities.size(), 1u);
  EXPECT_EQ(out.entities[0].surface, "PR");
  EXPECT_TRUE(out.relations.empty());
}

TEST(FilterByConfidence, RemapsIndicesAfterRemoval) {
  AnnotationSet a = three_entities();
  a.entities[0].confidence = 0.1;
  a.entities[2].confidence = 0.8;
  const auto out = filter_by_confidence(a, 0.7, FilterMode::keep_at_or_above);
  ASSERT_EQ(out.entities.size(), 2u);
  ASSERT_EQ(out.relations.size(), 1u);
  EXPECT_EQ(out.entities[out.relations[0].head].surface, "PR");
  EXPECT_EQ(out.entities[out.relations[0].tail].surface, "strongly");
}

TEST(FilterByConfidence, PropertyIdempotentMonotoneAndPartitioning) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = hare::testing::random_annotations(rng);
    const double t1 = hare::testing::unit(rng);
    const double t2 = t1 + (1.0 - t1) * hare::testing::unit(rng);
    for (FilterMode mode : {FilterMode::keep_at_or_above, FilterMode::keep_below}) {
      const auto once = filter_by_confidence(a, t1, mode);
      ASSERT_EQ(filter_by_confidence(once, t1, mode), once);
    }
    const auto lo = filter_by_confidence(a, t1, FilterMode::keep_at_or_above);
    const auto hi = filter_by_confidence(a, t2, FilterMode::keep_at_or_above);
    for (const auto& e : hi.entities) ASSERT_NE(std::find(lo.entities.begin(), lo.entities.end(), e), lo.entities.end());
    const auto below = filter_by_confidence(a, t1, FilterMode::keep_below);
    ASSERT_EQ(lo.entities.size() + below.entities.size(), a.entities.size());
  }
}

}  // namespace
