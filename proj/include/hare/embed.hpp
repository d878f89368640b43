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

// Entity embeddings: key normalization, the signed character n-gram hashing
// embedder, a file-backed vector store for externally produced vectors, and
// cosine similarity.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hare/error.hpp"
#include "hare/random.hpp"
#include "hare/text.hpp"

namespace hare::embed {

inline bool is_edge_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && !text::is_space(c) && !text::is_word_byte(c);
}

// Lowercase, collapse whitespace, strip leading/trailing punctuation.
inline std::string normalize_key(std::string_view text) {
  std::string collapsed;
  bool pending_space = false;
  for (char c : text) {
    if (text::is_space(c)) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed += ' ';
    pending_space = false;
    collapsed += text::ascii_lower(c);
  }
  std::size_t b = 0;
  std::size_t e = collapsed.size();
  while (b < e && (is_edge_punct(collapsed[b]) || collapsed[b] == ' ')) ++b;
  while (e > b && (is_edge_punct(collapsed[e - 1]) || collapsed[e - 1] == ' ')) --e;
  return collapsed.substr(b, e - b);
}

// Unit-norm vector, or the all-zero sentinel used for empty surfaces.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}

  static EmbeddingVector zero(std::size_t dim) { return EmbeddingVector(std::vector<double>(dim, 0.0)); }

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double squared_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return s;
  }
  double norm() const { return std::sqrt(squared_norm()); }
  bool is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
  }

  // Scales to unit length; the zero vector stays zero.
  EmbeddingVector normalized() const {
    const double n = norm();
    if (n == 0.0) return *this;
    std::vector<double> out(values_);
    for (double& v : out) v /= n;
    return EmbeddingVector(std::move(out));
  }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

inline double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw DataError("cosine: dimension mismatch (" + std::to_string(u.dim()) + " vs " +
                    std::to_string(v.dim()) + ")");
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  // sqrt(uu * vv) rather than |u||v| so that cosine(v, v) is exactly 1.
  return std::clamp(dot / std::sqrt(uu * vv), -1.0, 1.0);
}

inline double cosine_clamped(const EmbeddingVector& u, const EmbeddingVector& v) {
  return std::max(0.0, cosine(u, v));
}

struct HashedEmbedderConfig {
  std::vector<std::size_t> ngram_sizes{3, 4, 5};
  std::size_t dimension = 256;
  std::uint64_t seed = 0;

  void validate() const {
    if (dimension < 8) throw ConfigError("hashed embedder dimension must be >= 8");
    if (ngram_sizes.empty()) throw ConfigError("hashed embedder needs at least one n-gram size");
    for (std::size_t n : ngram_sizes) {
      if (n == 0) throw ConfigError("hashed embedder n-gram sizes must be >= 1");
    }
  }
};

// Signed feature hashing of the character n-grams of "<key>", where key is
// normalize_key(surface), followed by L2 normalization.
inline EmbeddingVector embed_hashed(std::string_view surface, const HashedEmbedderConfig& cfg) {
  cfg.validate();
  const std::string key = normalize_key(surface);
  if (key.empty()) return EmbeddingVector::zero(cfg.dimension);

  const std::string padded = "<" + key + ">";
  const text::Utf8Index index(padded);
  std::vector<double> acc(cfg.dimension, 0.0);
  std::size_t first_bucket = cfg.dimension;
  for (std::size_t n : cfg.ngram_sizes) {
    if (index.size() < n) continue;
    const std::uint64_t basis = kFnvOffset ^ splitmix64(cfg.seed ^ (static_cast<std::uint64_t>(n) << 56));
    for (std::size_t i = 0; i + n <= index.size(); ++i) {
      const std::uint64_t m = splitmix64(fnv1a64(index.slice(padded, {i, i + n}), basis));
      const std::size_t bucket = static_cast<std::size_t>(m % cfg.dimension);
      if (first_bucket == cfg.dimension) first_bucket = bucket;
      acc[bucket] += (m >> 63) ? -1.0 : 1.0;
    }
  }
  EmbeddingVector v(std::move(acc));
  if (v.is_zero()) {
    // Every n-gram cancelled out; keep the output on the unit sphere.
    std::vector<double> one(cfg.dimension, 0.0);
    one[first_bucket == cfg.dimension ? 0 : first_bucket] = 1.0;
    return EmbeddingVector(std::move(one));
  }
  return v.normalized();
}

enum class FallbackPolicy { hashed_fallback, error };

// Map from normalized key to unit vector; immutable once loaded.
class VectorStore {
 public:
  VectorStore(std::size_t dimension, FallbackPolicy policy) : dimension_(dimension), policy_(policy) {
    if (dimension == 0) throw DataError("vector store dimension must be >= 1");
    fallback_.dimension = dimension;
  }

  std::size_t dimension() const { return dimension_; }
  FallbackPolicy policy() const { return policy_; }
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }

  void set_fallback_seed(std::uint64_t seed) { fallback_.seed = seed; }
  const HashedEmbedderConfig& fallback_config() const { return fallback_; }

  // Stores v renormalized to unit length.
  void add(std::string key, const EmbeddingVector& v) {
    if (v.dim() != dimension_) {
      throw DataError("vector store: key '" + key + "' has dimension " + std::to_string(v.dim()) +
                      ", expected " + std::to_string(dimension_));
    }
    for (double x : v.values()) {
      if (!std::isfinite(x)) throw DataError("vector store: key '" + key + "' has a non-finite value");
    }
    if (v.is_zero()) throw DataError("vector store: key '" + key + "' is the zero vector");
    if (entries_.count(key)) throw DataError("vector store: duplicate key '" + key + "'");
    entries_.emplace(key, v.normalized());
    keys_.push_back(std::move(key));
  }

  const EmbeddingVector* find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  // Vector for normalize_key(surface). A multi-word key that is not stored
  // is mean-pooled from its words when all of them are. Anything else is a
  // miss, handled by the fallback policy and counted in `misses`.
  EmbeddingVector lookup(std::string_view surface, std::size_t& misses) const {
    const std::string key = normalize_key(surface);
    if (key.empty()) return EmbeddingVector::zero(dimension_);
    if (const EmbeddingVector* v = find(key)) return *v;
    if (auto pooled = pool_words(key)) return *pooled;
    ++misses;
    if (policy_ == FallbackPolicy::error) {
      throw DataError("vector store has no entry for key '" + key + "'");
    }
    return embed_hashed(key, fallback_);
  }

  static VectorStore read(std::istream& in, FallbackPolicy policy) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) break;
    }
    if (line.rfind("dim=", 0) != 0) {
      throw DataError("vector store: expected 'dim=<d>' header at line " + std::to_string(line_no));
    }
    std::size_t dim = 0;
    {
      const char* b = line.data() + 4;
      const char* e = line.data() + line.size();
      auto [p, ec] = std::from_chars(b, e, dim);
      if (ec != std::errc() || p != e || dim == 0) {
        throw DataError("vector store: bad dimension header '" + line + "'");
      }
    }
    VectorStore store(dim, policy);
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const std::size_t tab = line.find('\t');
      if (tab == std::string::npos || tab == 0) {
        throw DataError("vector store: malformed entry at line " + std::to_string(line_no));
      }
      std::vector<double> values;
      values.reserve(dim);
      const char* p = line.data() + tab + 1;
      const char* e = line.data() + line.size();
      while (p < e) {
        while (p < e && *p == ' ') ++p;
        if (p == e) break;
        double x = 0.0;
        auto [q, ec] = std::from_chars(p, e, x);
        if (ec != std::errc()) {
          throw DataError("vector store: bad number at line " + std::to_string(line_no));
        }
        values.push_back(x);
        p = q;
      }
      if (values.size() != dim) {
        throw DataError("vector store: dimension mismatch at line " + std::to_string(line_no) +
                        " (expected " + std::to_string(dim) + " values, got " +
                        std::to_string(values.size()) + ")");
      }
      try {
        store.add(line.substr(0, tab), EmbeddingVector(std::move(values)));
      } catch (const DataError& err) {
        throw DataError(std::string(err.what()) + " (line " + std::to_string(line_no) + ")");
      }
    }
    return store;
  }

  static VectorStore load(const std::string& path, FallbackPolicy policy) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open vector store '" + path + "'");
    return read(in, policy);
  }

  void write(std::ostream& out) const {
    out << "dim=" << dimension_ << '\n';
    char buf[32];
    for (const std::string& key : keys_) {
      out << key << '\t';
      const EmbeddingVector& v = entries_.at(key);
      for (std::size_t i = 0; i < v.dim(); ++i) {
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v[i]);
        if (i) out << ' ';
        out.write(buf, p - buf);
      }
      out << '\n';
    }
  }

 private:
  std::optional<EmbeddingVector> pool_words(const std::string& key) const {
    if (key.find(' ') == std::string::npos) return std::nullopt;
    std::vector<double> sum(dimension_, 0.0);
    std::size_t b = 0;
    while (b <= key.size()) {
      std::size_t e = key.find(' ', b);
      if (e == std::string::npos) e = key.size();
      const EmbeddingVector* w = find(key.substr(b, e - b));
      if (w == nullptr) return std::nullopt;
      for (std::size_t i = 0; i < dimension_; ++i) sum[i] += (*w)[i];
      b = e + 1;
    }
    EmbeddingVector pooled(std::move(sum));
    if (pooled.is_zero()) return std::nullopt;
    return pooled.normalized();
  }

  std::size_t dimension_;
  FallbackPolicy policy_;
  HashedEmbedderConfig fallback_;
  std::unordered_map<std::string, EmbeddingVector> entries_;
  std::vector<std::string> keys_;
};

// One entity occurrence to embed.
struct EntityRef {
  std::string_view report_id;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string_view surface;
};

// Stateless so one instance can serve concurrent scoring workers; misses
// are reported through the caller's counter.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(const EntityRef& entity, std::size_t& misses) const = 0;
  virtual std::size_t dimension() const = 0;
};

class HashedEmbedder final : public Embedder {
 public:
  explicit HashedEmbedder(HashedEmbedderConfig cfg = {}) : cfg_(std::move(cfg)) { cfg_.validate(); }

  EmbeddingVector embed(const EntityRef& entity, std::size_t&) const override {
    return embed_hashed(entity.surface, cfg_);
  }
  std::size_t dimension() const override { return cfg_.dimension; }
  const HashedEmbedderConfig& config() const { return cfg_; }

 private:
  HashedEmbedderConfig cfg_;
};

// Looks up the occurrence key "report_id#start#end" first (context-pooled
// vectors), then the surface key.
class StoreEmbedder final : public Embedder {
 public:
  explicit StoreEmbedder(const VectorStore& store) : store_(store) {}

  static std::string occurrence_key(std::string_view report_id, std::size_t start, std::size_t end) {
    return std::string(report_id) + "#" + std::to_string(start) + "#" + std::to_string(end);
  }

  EmbeddingVector embed(const EntityRef& entity, std::size_t& misses) const override {
    if (!entity.report_id.empty()) {
      if (const EmbeddingVector* v =
              store_.find(occurrence_key(entity.report_id, entity.start, entity.end))) {
        return *v;
      }
    }
    return store_.lookup(entity.surface, misses);
  }
  std::size_t dimension() const override { return store_.dimension(); }

 private:
  const VectorStore& store_;
};

}  // namespace hare::embed
