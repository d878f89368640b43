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

// Reports, span-anchored annotations and expert ratings, plus their
// line-delimited / CSV file formats.

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hare/error.hpp"
#include "hare/text.hpp"

namespace hare::corpus {

enum class Label {
  anatomical_site,
  ihc_marker,
  pathological_diagnosis,
  diagnosis_descriptor,
  ihc_modifier,
};

inline constexpr std::array<Label, 5> kAllLabels = {
    Label::anatomical_site, Label::ihc_marker, Label::pathological_diagnosis,
    Label::diagnosis_descriptor, Label::ihc_modifier};

inline std::string_view to_string(Label label) {
  switch (label) {
    case Label::anatomical_site: return "anatomical_site";
    case Label::ihc_marker: return "ihc_marker";
    case Label::pathological_diagnosis: return "pathological_diagnosis";
    case Label::diagnosis_descriptor: return "diagnosis_descriptor";
    case Label::ihc_modifier: return "ihc_modifier";
  }
  return "?";
}

inline std::optional<Label> parse_label(std::string_view name) {
  for (Label l : kAllLabels) {
    if (to_string(l) == name) return l;
  }
  return std::nullopt;
}

enum class RelationType { marker_modifier, diagnosis_descriptor };

inline constexpr std::array<RelationType, 2> kAllRelationTypes = {
    RelationType::marker_modifier, RelationType::diagnosis_descriptor};

inline std::string_view to_string(RelationType type) {
  switch (type) {
    case RelationType::marker_modifier: return "ihc_marker-ihc_modifier";
    case RelationType::diagnosis_descriptor: return "diagnosis-diagnosis_descriptor";
  }
  return "?";
}

// Accepts the canonical ASCII names and the en-dash spelling.
inline std::optional<RelationType> parse_relation_type(std::string_view name) {
  std::string ascii(name);
  for (std::size_t pos; (pos = ascii.find("\xE2\x80\x93")) != std::string::npos;) {
    ascii.replace(pos, 3, "-");
  }
  for (RelationType t : kAllRelationTypes) {
    if (to_string(t) == ascii) return t;
  }
  return std::nullopt;
}

struct Endpoints {
  Label head;
  Label tail;
};

inline Endpoints endpoints(RelationType type) {
  switch (type) {
    case RelationType::marker_modifier: return {Label::ihc_marker, Label::ihc_modifier};
    case RelationType::diagnosis_descriptor:
      return {Label::pathological_diagnosis, Label::diagnosis_descriptor};
  }
  return {Label::ihc_marker, Label::ihc_modifier};
}

// Relation type whose (head, tail) endpoint labels are exactly these.
inline std::optional<RelationType> relation_type_for(Label head, Label tail) {
  for (RelationType t : kAllRelationTypes) {
    const Endpoints e = endpoints(t);
    if (e.head == head && e.tail == tail) return t;
  }
  return std::nullopt;
}

inline bool is_relation_head(Label l) {
  return l == Label::ihc_marker || l == Label::pathological_diagnosis;
}
inline bool is_relation_tail(Label l) {
  return l == Label::ihc_modifier || l == Label::diagnosis_descriptor;
}

struct Report {
  std::string id;
  std::string text;
};

// Offsets are code points into the report text, end exclusive.
struct EntityMention {
  std::size_t start = 0;
  std::size_t end = 0;
  Label label = Label::anatomical_site;
  std::string surface;
  double confidence = 1.0;

  text::Span span() const { return {start, end}; }
  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct RelationInstance {
  std::size_t head = 0;
  std::size_t tail = 0;
  RelationType type = RelationType::marker_modifier;
  double confidence = 1.0;

  friend bool operator==(const RelationInstance&, const RelationInstance&) = default;
};

enum class Source { gold, predicted };

struct AnnotationSet {
  std::string report_id;
  std::vector<EntityMention> entities;
  std::vector<RelationInstance> relations;
  Source source = Source::predicted;

  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

struct ExpertScore {
  std::string report_id;
  int score = 0;

  friend bool operator==(const ExpertScore&, const ExpertScore&) = default;
};

// Reports addressable by id; keeps file order.
class ReportIndex {
 public:
  ReportIndex() = default;
  explicit ReportIndex(std::vector<Report> reports) : reports_(std::move(reports)) {
    for (std::size_t i = 0; i < reports_.size(); ++i) {
      if (!by_id_.emplace(reports_[i].id, i).second) {
        throw DataError("duplicate report id '" + reports_[i].id + "'");
      }
    }
  }

  const Report* find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &reports_[it->second];
  }
  const std::vector<Report>& reports() const { return reports_; }
  std::size_t size() const { return reports_.size(); }

 private:
  std::vector<Report> reports_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Annotation sets keyed by report id, in file order.
class AnnotationCorpus {
 public:
  void add(AnnotationSet set) {
    if (!by_id_.emplace(set.report_id, sets_.size()).second) {
      throw DataError("duplicate annotation record for report '" + set.report_id + "'");
    }
    sets_.push_back(std::move(set));
  }

  const AnnotationSet* find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &sets_[it->second];
  }
  const std::vector<AnnotationSet>& sets() const { return sets_; }
  std::size_t size() const { return sets_.size(); }

 private:
  std::vector<AnnotationSet> sets_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Checks every invariant of an annotation set. When the report is given,
// spans are checked against its text and surfaces are filled in from it.
inline void validate(AnnotationSet& set, const Report* report) {
  const std::string where = "report '" + set.report_id + "'";
  std::optional<text::Utf8Index> index;
  if (report != nullptr) index.emplace(report->text);

  for (std::size_t i = 0; i < set.entities.size(); ++i) {
    EntityMention& e = set.entities[i];
    const std::string what = where + " entity " + std::to_string(i);
    if (e.start >= e.end) {
      throw DataError(what + ": empty or inverted span [" + std::to_string(e.start) + "," +
                      std::to_string(e.end) + ")");
    }
    if (!(e.confidence >= 0.0 && e.confidence <= 1.0)) {
      throw DataError(what + ": confidence outside [0,1]");
    }
    if (set.source == Source::gold && e.confidence != 1.0) {
      std::ostringstream msg;
      msg << what << ": gold confidence " << e.confidence << " != 1.0";
      throw DataError(msg.str());
    }
    if (index) {
      if (e.end > index->size()) {
        throw DataError(what + ": span [" + std::to_string(e.start) + "," + std::to_string(e.end) +
                        ") out of bounds for text of length " + std::to_string(index->size()));
      }
      const std::string_view actual = index->slice(report->text, e.span());
      if (!e.surface.empty() && e.surface != actual) {
        throw DataError(what + ": surface '" + e.surface + "' does not match text '" +
                        std::string(actual) + "'");
      }
      e.surface = std::string(actual);
    }
  }

  for (std::size_t i = 0; i < set.relations.size(); ++i) {
    const RelationInstance& r = set.relations[i];
    const std::string what = where + " relation " + std::to_string(i);
    const std::size_t n = set.entities.size();
    if (r.head >= n || r.tail >= n) {
      throw DataError(what + ": " + (r.head >= n ? "head" : "tail") + " index " +
                      std::to_string(r.head >= n ? r.head : r.tail) + " out of range (" +
                      std::to_string(n) + " entities)");
    }
    if (r.head == r.tail) throw DataError(what + ": head equals tail");
    const Endpoints want = endpoints(r.type);
    if (set.entities[r.head].label != want.head || set.entities[r.tail].label != want.tail) {
      throw DataError(what + ": endpoint labels " +
                      std::string(to_string(set.entities[r.head].label)) + "/" +
                      std::string(to_string(set.entities[r.tail].label)) + " do not fit type " +
                      std::string(to_string(r.type)));
    }
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
      throw DataError(what + ": confidence outside [0,1]");
    }
    if (set.source == Source::gold && r.confidence != 1.0) {
      std::ostringstream msg;
      msg << what << ": gold confidence " << r.confidence << " != 1.0";
      throw DataError(msg.str());
    }
  }
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

inline bool blank(std::string_view line) {
  for (char c : line) {
    if (!text::is_space(c)) return false;
  }
  return true;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed record at line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.is_object()) {
      throw DataError("malformed record at line " + std::to_string(line_no) + ": not an object");
    }
    fn(record, line_no);
  }
}

template <typename T>
T field(const nlohmann::json& record, const char* name, std::size_t line_no) {
  auto it = record.find(name);
  if (it == record.end()) {
    throw DataError("missing field '" + std::string(name) + "' at line " + std::to_string(line_no));
  }
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError("bad type for field '" + std::string(name) + "' at line " +
                    std::to_string(line_no));
  }
}

inline std::size_t index_field(const nlohmann::json& record, const char* name,
                               std::size_t line_no) {
  auto it = record.find(name);
  if (it == record.end()) {
    throw DataError("missing field '" + std::string(name) + "' at line " + std::to_string(line_no));
  }
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw DataError("field '" + std::string(name) + "' must be a non-negative integer at line " +
                    std::to_string(line_no));
  }
  return it->get<std::size_t>();
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t b = 0;
  for (;;) {
    const std::size_t comma = line.find(',', b);
    cells.push_back(line.substr(b, comma == std::string_view::npos ? std::string_view::npos
                                                                    : comma - b));
    if (comma == std::string_view::npos) break;
    b = comma + 1;
  }
  for (auto& c : cells) {
    while (!c.empty() && text::is_space(c.front())) c.remove_prefix(1);
    while (!c.empty() && text::is_space(c.back())) c.remove_suffix(1);
  }
  return cells;
}

}  // namespace detail

inline std::vector<Report> read_reports(std::istream& in) {
  std::vector<Report> reports;
  std::unordered_map<std::string, std::size_t> seen;
  detail::for_each_json_line(in, [&](const nlohmann::json& rec, std::size_t line_no) {
    Report r{detail::field<std::string>(rec, "id", line_no),
             detail::field<std::string>(rec, "text", line_no)};
    if (r.id.empty()) throw DataError("empty id at line " + std::to_string(line_no));
    if (r.text.empty()) throw DataError("empty text at line " + std::to_string(line_no));
    if (!seen.emplace(r.id, line_no).second) {
      throw DataError("duplicate report id '" + r.id + "' at line " + std::to_string(line_no));
    }
    reports.push_back(std::move(r));
  });
  return reports;
}

inline std::vector<Report> load_reports(const std::string& path) {
  auto in = detail::open_input(path);
  return read_reports(in);
}

inline void write_reports(std::ostream& out, const std::vector<Report>& reports) {
  for (const Report& r : reports) {
    nlohmann::ordered_json rec;
    rec["id"] = r.id;
    rec["text"] = r.text;
    out << rec.dump() << '\n';
  }
}

// Reads annotation records. With reports, every record must name a known
// report and spans are validated against its text; without, surfaces come
// from the optional "surface" field.
inline AnnotationCorpus read_annotations(std::istream& in, Source source,
                                         const ReportIndex* reports = nullptr) {
  AnnotationCorpus corpus;
  detail::for_each_json_line(in, [&](const nlohmann::json& rec, std::size_t line_no) {
    AnnotationSet set;
    set.source = source;
    set.report_id = detail::field<std::string>(rec, "report_id", line_no);
    const auto ents = rec.find("entities");
    const auto rels = rec.find("relations");
    if (ents == rec.end()) {
      throw DataError("missing field 'entities' at line " + std::to_string(line_no));
    }
    if (!ents->is_array() || (rels != rec.end() && !rels->is_array())) {
      throw DataError("malformed record at line " + std::to_string(line_no));
    }
    for (const auto& e : *ents) {
      EntityMention m;
      m.start = detail::index_field(e, "start", line_no);
      m.end = detail::index_field(e, "end", line_no);
      const auto label = detail::field<std::string>(e, "label", line_no);
      const auto parsed = parse_label(label);
      if (!parsed) {
        throw DataError("unknown label '" + label + "' at line " + std::to_string(line_no));
      }
      m.label = *parsed;
      if (auto c = e.find("confidence"); c != e.end()) {
        m.confidence = detail::field<double>(e, "confidence", line_no);
      } else if (source == Source::predicted) {
        throw DataError("missing field 'confidence' at line " + std::to_string(line_no));
      }
      if (auto s = e.find("surface"); s != e.end()) m.surface = detail::field<std::string>(e, "surface", line_no);
      set.entities.push_back(std::move(m));
    }
    if (rels != rec.end()) {
      for (const auto& r : *rels) {
        RelationInstance ri;
        ri.head = detail::index_field(r, "head", line_no);
        ri.tail = detail::index_field(r, "tail", line_no);
        const auto type = detail::field<std::string>(r, "type", line_no);
        const auto parsed = parse_relation_type(type);
        if (!parsed) {
          throw DataError("unknown relation type '" + type + "' at line " +
                          std::to_string(line_no));
        }
        ri.type = *parsed;
        if (auto c = r.find("confidence"); c != r.end()) {
          ri.confidence = detail::field<double>(r, "confidence", line_no);
        } else if (source == Source::predicted) {
          throw DataError("missing field 'confidence' at line " + std::to_string(line_no));
        }
        set.relations.push_back(ri);
      }
    }
    const Report* report = nullptr;
    if (reports != nullptr) {
      report = reports->find(set.report_id);
      if (report == nullptr) {
        throw DataError("annotations at line " + std::to_string(line_no) +
                        " reference unknown report '" + set.report_id + "'");
      }
    }
    try {
      validate(set, report);
    } catch (const DataError& e) {
      throw DataError(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
    corpus.add(std::move(set));
  });
  return corpus;
}

inline AnnotationCorpus load_annotations(const std::string& path, Source source,
                                         const ReportIndex* reports = nullptr) {
  auto in = detail::open_input(path);
  return read_annotations(in, source, reports);
}

inline nlohmann::ordered_json to_json(const AnnotationSet& set) {
  nlohmann::ordered_json rec;
  rec["report_id"] = set.report_id;
  rec["entities"] = nlohmann::ordered_json::array();
  for (const EntityMention& e : set.entities) {
    nlohmann::ordered_json j;
    j["start"] = e.start;
    j["end"] = e.end;
    j["label"] = to_string(e.label);
    if (!e.surface.empty()) j["surface"] = e.surface;
    j["confidence"] = e.confidence;
    rec["entities"].push_back(std::move(j));
  }
  rec["relations"] = nlohmann::ordered_json::array();
  for (const RelationInstance& r : set.relations) {
    nlohmann::ordered_json j;
    j["head"] = r.head;
    j["tail"] = r.tail;
    j["type"] = to_string(r.type);
    j["confidence"] = r.confidence;
    rec["relations"].push_back(std::move(j));
  }
  return rec;
}

inline void write_annotations(std::ostream& out, const AnnotationCorpus& corpus) {
  for (const AnnotationSet& set : corpus.sets()) out << to_json(set).dump() << '\n';
}

inline std::vector<ExpertScore> read_expert_scores(std::istream& in) {
  std::vector<ExpertScore> scores;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (detail::blank(line)) continue;
    const auto cells = detail::split_csv(line);
    if (!header) {
      if (cells.size() != 2 || cells[0] != "report_id" || cells[1] != "score") {
        throw DataError("expert scores: expected header 'report_id,score' at line " +
                        std::to_string(line_no));
      }
      header = true;
      continue;
    }
    if (cells.size() != 2 || cells[0].empty()) {
      throw DataError("expert scores: malformed record at line " + std::to_string(line_no));
    }
    const std::string id(cells[0]);
    int value = 0;
    const auto* first = cells[1].data();
    const auto* last = first + cells[1].size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw DataError("expert score for record '" + id + "' (line " + std::to_string(line_no) +
                      ") is not an integer: '" + std::string(cells[1]) + "'");
    }
    if (value < 0 || value > 5) {
      throw DataError("expert score for record '" + id + "' (line " + std::to_string(line_no) +
                      ") outside 0-5: " + std::to_string(value));
    }
    if (!seen.emplace(id, line_no).second) {
      throw DataError("duplicate expert score for record '" + id + "' at line " +
                      std::to_string(line_no));
    }
    scores.push_back({id, value});
  }
  return scores;
}

inline std::vector<ExpertScore> load_expert_scores(const std::string& path) {
  auto in = detail::open_input(path);
  return read_expert_scores(in);
}

inline void write_expert_scores(std::ostream& out, const std::vector<ExpertScore>& scores) {
  out << "report_id,score\n";
  for (const ExpertScore& s : scores) out << s.report_id << ',' << s.score << '\n';
}

}  // namespace hare::corpus
