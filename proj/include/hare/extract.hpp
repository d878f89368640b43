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

// Model-free extraction: a gazetteer longest-match entity tagger, a
// distance-based relation linker, and confidence filtering for any
// predicted annotation set.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hare/corpus.hpp"
#include "hare/error.hpp"
#include "hare/text.hpp"

namespace hare::extract {

using corpus::AnnotationSet;
using corpus::EntityMention;
using corpus::Label;
using corpus::RelationInstance;
using corpus::RelationType;
using corpus::Report;

// Lowercase and collapse internal whitespace runs to single spaces.
inline std::string normalize_lexicon_entry(std::string_view entry) {
  std::string out;
  bool pending_space = false;
  for (char c : entry) {
    if (text::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += text::ascii_lower(c);
  }
  return out;
}

class Gazetteer {
 public:
  Gazetteer() : priority_(corpus::kAllLabels.begin(), corpus::kAllLabels.end()) {
    nodes_.emplace_back();
  }

  void add(Label label, std::string_view entry) {
    const std::string norm = normalize_lexicon_entry(entry);
    if (norm.empty()) return;
    const auto tokens = text::tokenize(norm);
    std::size_t node = 0;
    for (const auto& tok : tokens) {
      auto it = nodes_[node].children.find(std::string(tok.text));
      if (it == nodes_[node].children.end()) {
        const std::size_t next = nodes_.size();
        nodes_[node].children.emplace(std::string(tok.text), next);
        nodes_.emplace_back();
        node = next;
      } else {
        node = it->second;
      }
    }
    const auto bit = static_cast<std::uint8_t>(1u << static_cast<unsigned>(label));
    if ((nodes_[node].labels & bit) == 0) ++entries_;
    nodes_[node].labels |= bit;
  }

  // Labels earlier in the list win length ties.
  void set_priority(std::vector<Label> order) {
    for (Label l : corpus::kAllLabels) {
      if (std::find(order.begin(), order.end(), l) == order.end()) order.push_back(l);
    }
    priority_ = std::move(order);
  }

  const std::vector<Label>& priority() const { return priority_; }

  std::size_t rank(Label l) const {
    return static_cast<std::size_t>(std::find(priority_.begin(), priority_.end(), l) -
                                    priority_.begin());
  }

  // Number of (label, entry) pairs.
  std::size_t size() const { return entries_; }

  // Layout: one subdirectory per label (every file inside is a lexicon),
  // or a "<label>.txt" file. An optional "priority.txt" lists labels in
  // tie-break order. Lines starting with '#' are comments.
  static Gazetteer load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
      throw ConfigError("gazetteer directory '" + dir.string() + "' does not exist");
    }
    Gazetteer gaz;
    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(dir)) entries.push_back(e.path());
    std::sort(entries.begin(), entries.end());
    for (const fs::path& p : entries) {
      const std::string name = p.filename().string();
      if (fs::is_directory(p)) {
        const auto label = corpus::parse_label(name);
        if (!label) throw ConfigError("gazetteer: unknown label directory '" + name + "'");
        std::vector<fs::path> files;
        for (const auto& f : fs::directory_iterator(p)) {
          if (f.is_regular_file()) files.push_back(f.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) gaz.read_lexicon(*label, f);
      } else if (name == "priority.txt") {
        std::vector<Label> order;
        for (const std::string& line : read_lines(p)) {
          const auto label = corpus::parse_label(line);
          if (!label) throw ConfigError("gazetteer priority: unknown label '" + line + "'");
          order.push_back(*label);
        }
        gaz.set_priority(std::move(order));
      } else if (p.extension() == ".txt") {
        const auto label = corpus::parse_label(p.stem().string());
        if (!label) throw ConfigError("gazetteer: unknown lexicon file '" + name + "'");
        gaz.read_lexicon(*label, p);
      }
    }
    return gaz;
  }

  struct Match {
    std::size_t first_token;
    std::size_t last_token;  // inclusive
    Label label;
  };

  // Every lexicon hit over the token sequence, overlapping ones included.
  std::vector<Match> all_matches(const std::vector<text::Token>& tokens) const {
    std::vector<std::string> lowered;
    lowered.reserve(tokens.size());
    for (const auto& t : tokens) lowered.push_back(text::ascii_lower(t.text));
    std::vector<Match> matches;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      std::size_t node = 0;
      for (std::size_t j = i; j < tokens.size(); ++j) {
        auto it = nodes_[node].children.find(lowered[j]);
        if (it == nodes_[node].children.end()) break;
        node = it->second;
        for (Label l : corpus::kAllLabels) {
          if (nodes_[node].labels & (1u << static_cast<unsigned>(l))) matches.push_back({i, j, l});
        }
      }
    }
    return matches;
  }

 private:
  struct Node {
    std::unordered_map<std::string, std::size_t> children;
    std::uint8_t labels = 0;
  };

  static std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open gazetteer file '" + p.string() + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
      const std::string norm = normalize_lexicon_entry(line);
      if (norm.empty() || norm.front() == '#') continue;
      lines.push_back(norm);
    }
    return lines;
  }

  void read_lexicon(Label label, const std::filesystem::path& p) {
    for (const std::string& entry : read_lines(p)) add(label, entry);
  }

  std::vector<Node> nodes_;
  std::vector<Label> priority_;
  std::size_t entries_ = 0;
};

// Case-insensitive, token-aligned, non-overlapping lexicon matches. Longer
// matches (in characters) win; equal lengths fall back to label priority,
// then to the leftmost match. Confidence is always 1.0.
inline std::vector<EntityMention> tag_entities(const Report& report, const Gazetteer& gaz) {
  const auto tokens = text::tokenize(report.text);
  const text::Utf8Index index(report.text);

  struct Candidate {
    Gazetteer::Match match;
    text::Span cps;
  };
  std::vector<Candidate> candidates;
  for (const auto& m : gaz.all_matches(tokens)) {
    candidates.push_back({m, index.to_cps({tokens[m.first_token].begin, tokens[m.last_token].end})});
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.cps.size() != b.cps.size()) return a.cps.size() > b.cps.size();
    if (a.match.label != b.match.label) return gaz.rank(a.match.label) < gaz.rank(b.match.label);
    return a.cps.start < b.cps.start;
  });

  std::vector<bool> taken(tokens.size(), false);
  std::vector<EntityMention> out;
  for (const Candidate& c : candidates) {
    bool free = true;
    for (std::size_t t = c.match.first_token; t <= c.match.last_token && free; ++t) free = !taken[t];
    if (!free) continue;
    for (std::size_t t = c.match.first_token; t <= c.match.last_token; ++t) taken[t] = true;
    out.push_back({c.cps.start, c.cps.end, c.match.label,
                   std::string(index.slice(report.text, c.cps)), 1.0});
  }
  std::sort(out.begin(), out.end(),
            [](const EntityMention& a, const EntityMention& b) { return a.start < b.start; });
  return out;
}

struct LinkerConfig {
  std::size_t window = 20;  // tokens
  std::vector<RelationType> types{corpus::kAllRelationTypes.begin(),
                                  corpus::kAllRelationTypes.end()};
};

// Links every modifier/descriptor to its nearest compatible head in the same
// sentence, if that head lies within cfg.window tokens. Distance is the
// token count between the two spans' last tokens; confidence decays
// linearly to 0 at the window edge. Distance ties go to the leftmost head.
inline std::vector<RelationInstance> link_relations(const Report& report,
                                                    const std::vector<EntityMention>& entities,
                                                    const LinkerConfig& cfg) {
  if (cfg.window == 0) throw ConfigError("linker window must be >= 1");
  const auto tokens = text::tokenize(report.text);
  const auto sentences = text::split_sentences_bytes(report.text);
  const text::Utf8Index index(report.text);

  const std::size_t n = entities.size();
  std::vector<std::size_t> last_token(n), sentence(n);
  for (std::size_t i = 0; i < n; ++i) {
    const text::Span b = index.to_bytes(entities[i].span());
    auto it = std::lower_bound(tokens.begin(), tokens.end(), b.end,
                               [](const text::Token& t, std::size_t pos) { return t.begin < pos; });
    last_token[i] = it == tokens.begin() ? 0 : static_cast<std::size_t>(it - tokens.begin()) - 1;
    std::size_t s = 0;
    for (std::size_t k = 0; k < sentences.size(); ++k) {
      if (sentences[k].start <= b.start) s = k;
    }
    sentence[i] = s;
  }

  std::vector<RelationInstance> out;
  for (std::size_t t = 0; t < n; ++t) {
    if (!corpus::is_relation_tail(entities[t].label)) continue;
    std::size_t best = n;
    std::size_t best_distance = 0;
    RelationType best_type{};
    for (std::size_t h = 0; h < n; ++h) {
      if (h == t || sentence[h] != sentence[t]) continue;
      const auto type = corpus::relation_type_for(entities[h].label, entities[t].label);
      if (!type || std::find(cfg.types.begin(), cfg.types.end(), *type) == cfg.types.end()) continue;
      const std::size_t d = last_token[h] > last_token[t] ? last_token[h] - last_token[t]
                                                          : last_token[t] - last_token[h];
      if (d > cfg.window) continue;
      const bool closer = best == n || d < best_distance ||
                          (d == best_distance && entities[h].start < entities[best].start);
      if (closer) {
        best = h;
        best_distance = d;
        best_type = *type;
      }
    }
    if (best == n) continue;
    const double conf = std::max(0.0, 1.0 - static_cast<double>(best_distance) /
                                                static_cast<double>(cfg.window));
    out.push_back({best, t, best_type, conf});
  }
  std::sort(out.begin(), out.end(), [](const RelationInstance& a, const RelationInstance& b) {
    return a.head != b.head ? a.head < b.head : a.tail < b.tail;
  });
  return out;
}

enum class FilterMode { keep_at_or_above, keep_below };

inline bool keeps(FilterMode mode, double confidence, double threshold) {
  return mode == FilterMode::keep_at_or_above ? confidence >= threshold : confidence < threshold;
}

// Filters entities and relations by the same predicate. Relations that lose
// an endpoint are dropped; surviving relation indices are remapped.
inline AnnotationSet filter_by_confidence(const AnnotationSet& annots, double entity_threshold,
                                          double relation_threshold, FilterMode mode) {
  AnnotationSet out;
  out.report_id = annots.report_id;
  out.source = annots.source;
  constexpr std::size_t kDropped = static_cast<std::size_t>(-1);
  std::vector<std::size_t> remap(annots.entities.size(), kDropped);
  for (std::size_t i = 0; i < annots.entities.size(); ++i) {
    if (keeps(mode, annots.entities[i].confidence, entity_threshold)) {
      remap[i] = out.entities.size();
      out.entities.push_back(annots.entities[i]);
    }
  }
  for (const RelationInstance& r : annots.relations) {
    if (!keeps(mode, r.confidence, relation_threshold)) continue;
    if (r.head >= remap.size() || r.tail >= remap.size()) continue;
    if (remap[r.head] == kDropped || remap[r.tail] == kDropped) continue;
    RelationInstance kept = r;
    kept.head = remap[r.head];
    kept.tail = remap[r.tail];
    out.relations.push_back(kept);
  }
  return out;
}

inline AnnotationSet filter_by_confidence(const AnnotationSet& annots, double threshold,
                                          FilterMode mode) {
  return filter_by_confidence(annots, threshold, threshold, mode);
}

// Tags and links one report end to end.
inline AnnotationSet extract(const Report& report, const Gazetteer& gaz, const LinkerConfig& cfg) {
  AnnotationSet set;
  set.report_id = report.id;
  set.source = corpus::Source::predicted;
  set.entities = tag_entities(report, gaz);
  set.relations = link_relations(report, set.entities, cfg);
  return set;
}

}  // namespace hare::extract
