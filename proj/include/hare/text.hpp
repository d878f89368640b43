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

// Text primitives shared by the corpus and extraction code: UTF-8 offset
// mapping, the model-free tokenizer, the rule-based sentence splitter and
// greedy length-capped chunking.
//
// Public spans are half-open ranges of Unicode code points, which is how
// annotation tools (and Python string indexing) address report text.
// Tokens carry byte offsets because they are only used internally.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hare::text {

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool contains(std::size_t pos) const { return pos >= start && pos < end; }
  friend bool operator==(const Span&, const Span&) = default;
};

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }

// Non-ASCII bytes count as word characters so multi-byte letters stay
// inside one token.
inline bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z');
}

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = ascii_lower(c);
  return out;
}

// Maps code point offsets to byte offsets and back for one string.
class Utf8Index {
 public:
  explicit Utf8Index(std::string_view text) : bytes_(text.size()) {
    for (std::size_t i = 0; i < text.size(); ++i) {
      if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
        starts_.push_back(i);
      }
    }
    starts_.push_back(text.size());
  }

  // Number of code points.
  std::size_t size() const { return starts_.size() - 1; }

  std::size_t byte_offset(std::size_t cp) const {
    if (cp > size()) throw std::out_of_range("code point offset past end");
    return starts_[cp];
  }

  // Code point containing (or starting at) the given byte.
  std::size_t cp_offset(std::size_t byte) const {
    if (byte >= bytes_) return size();
    auto it = std::upper_bound(starts_.begin(), starts_.end() - 1, byte);
    return static_cast<std::size_t>(it - starts_.begin()) - 1;
  }

  Span to_bytes(Span cp) const { return {byte_offset(cp.start), byte_offset(cp.end)}; }
  Span to_cps(Span bytes) const { return {cp_offset(bytes.start), cp_offset(bytes.end)}; }

  std::string_view slice(std::string_view text, Span cp) const {
    const Span b = to_bytes(cp);
    return text.substr(b.start, b.end - b.start);
  }

 private:
  std::size_t bytes_;
  std::vector<std::size_t> starts_;
};

inline std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

struct Token {
  std::string_view text;
  std::size_t begin = 0;  // byte offset
  std::size_t end = 0;
};

// Token = maximal run of word characters, or a single punctuation
// character. Whitespace only separates.
inline std::vector<Token> tokenize(std::string_view text, std::size_t offset = 0) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (is_word_byte(text[i])) {
      while (j < text.size() && is_word_byte(text[j])) ++j;
    }
    tokens.push_back({text.substr(i, j - i), offset + i, offset + j});
    i = j;
  }
  return tokens;
}

inline constexpr std::array<std::string_view, 15> kAbbreviations = {
    "approx.", "no.", "ca.", "vs.", "fig.", "figs.", "e.g.", "i.e.",
    "cf.",     "dr.", "incl.", "resp.", "nos.", "pt.", "mr."};

inline bool is_guarded_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !is_space(text[b - 1])) --b;
  while (b < dot && (text[b] == '(' || text[b] == '[' || text[b] == '"' || text[b] == '\'')) ++b;
  const std::string word = ascii_lower(text.substr(b, dot + 1 - b));
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

namespace detail {

inline bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
inline bool is_closer(char c) {
  return is_terminator(c) || c == '"' || c == '\'' || c == ')' || c == ']';
}

}  // namespace detail

// Byte-offset variant of split_sentences.
inline std::vector<Span> split_sentences_bytes(std::string_view text) {
  std::vector<Span> spans;
  const std::size_t n = text.size();
  auto skip_space = [&](std::size_t i) {
    while (i < n && is_space(text[i])) ++i;
    return i;
  };
  auto emit = [&](std::size_t b, std::size_t e) {
    while (e > b && is_space(text[e - 1])) --e;
    if (e > b) spans.push_back({b, e});
  };

  std::size_t start = skip_space(0);
  std::size_t i = start;
  while (i < n) {
    const char c = text[i];
    if (detail::is_terminator(c)) {
      std::size_t j = i + 1;
      while (j < n && detail::is_closer(text[j])) ++j;
      const bool followed = j == n || is_space(text[j]) || is_upper(text[j]);
      const bool guarded = c == '.' && j == i + 1 && is_guarded_abbreviation(text, i);
      if (followed && !guarded) {
        emit(start, j);
        start = skip_space(j);
        i = start;
        continue;
      }
      i = j;
      continue;
    }
    if (c == '\n') {
      const bool followed = i + 1 == n || is_space(text[i + 1]) || is_upper(text[i + 1]);
      if (followed) {
        emit(start, i);
        start = skip_space(i + 1);
        i = start;
        continue;
      }
    }
    ++i;
  }
  if (start < n) emit(start, n);
  return spans;
}

// Sentence spans in code points. Boundaries fall after '.', '!' or '?'
// (plus trailing closers) and at newlines, when followed by whitespace, an
// uppercase letter or the end of text. A period that ends a guarded
// abbreviation such as "approx." never splits.
inline std::vector<Span> split_sentences(std::string_view text) {
  std::vector<Span> spans = split_sentences_bytes(text);
  const Utf8Index index(text);
  for (Span& s : spans) s = index.to_cps(s);
  return spans;
}

// Greedy left-to-right split into chunks of at most max_len items. All
// chunks but the last are exactly max_len long.
template <typename T>
std::vector<std::span<const T>> chunk_sentence(std::span<const T> tokens, std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("chunk_sentence: max_len must be >= 1");
  std::vector<std::span<const T>> chunks;
  for (std::size_t i = 0; i < tokens.size(); i += max_len) {
    chunks.push_back(tokens.subspan(i, std::min(max_len, tokens.size() - i)));
  }
  return chunks;
}

template <typename T>
std::vector<std::span<const T>> chunk_sentence(const std::vector<T>& tokens, std::size_t max_len) {
  return chunk_sentence(std::span<const T>(tokens), max_len);
}

}  // namespace hare::text
