/*
 * Copyright 2026 The Acurai Middleware Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "acurai/nlp.hpp"

namespace acurai {

struct EmbeddingVector {
  std::vector<double> values;
  std::string provider_id;

  std::size_t dimension() const noexcept { return values.size(); }
};

/// Cosine of the angle between two vectors, clamped to [-1, 1].
/// Throws invalid-input on dimension mismatch or a zero vector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  /// One vector per input string, in input order.
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

/// Offline provider. Words are hashed as character trigrams (with ^ and $
/// boundaries) into signed buckets; words listed in the concept table also
/// share a class direction, so that members of one class (calcium, magnesium)
/// land close together. A phrase is the head-weighted sum of its word vectors.
class HashedNgramProvider final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDimension = 64;

  HashedNgramProvider();
  std::string id() const override { return "hashed-ngram-64-v1"; }
  std::size_t dimension() const override { return kDimension; }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

  /// Vector for a single word (lower-cased lemma), unit length.
  std::vector<double> word_vector(const std::string& lemma) const;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::unordered_map<std::string, std::string> concept_;
  std::atomic<std::size_t> calls_{0};
};

struct HttpEmbeddingConfig {
  std::string url;  // full endpoint, e.g. http://host:port/v1/embeddings
  std::string model;
  std::string api_key;  // falls back to ACURAI_EMBED_API_KEY
  std::size_t batch_size = 64;
  int max_attempts = 3;
  std::chrono::milliseconds backoff{250};
  std::chrono::seconds timeout{30};
};

/// Batch embeddings over HTTP: POST {"input": [...], "model": m} and read
/// {"data": [{"embedding": [...]}, ...]}. In-flight requests are bounded by a
/// process-wide limit shared by all instances.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig config);
  std::string id() const override { return "http:" + config_.model; }
  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

  static void set_max_in_flight(std::ptrdiff_t n);

 private:
  std::vector<EmbeddingVector> embed_one_batch(const std::vector<std::string>& batch);

  HttpEmbeddingConfig config_;
  std::size_t dimension_ = 0;
  std::mutex mu_;
};

/// Shared, synchronized cache keyed by (provider id, text).
class EmbeddingCache {
 public:
  bool lookup(const std::string& provider_id, const std::string& text, EmbeddingVector& out) const;
  void store(const std::string& provider_id, const std::string& text, const EmbeddingVector& v);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, EmbeddingVector> entries_;
};

/// Order-preserving batch embedding; misses are fetched in one provider call.
std::vector<EmbeddingVector> embed_batch(EmbeddingProvider& provider,
                                         const std::vector<std::string>& texts,
                                         EmbeddingCache* cache = nullptr);

/// Symmetric, transitively closed synonym/abbreviation table. Terms written in
/// capitals (US, PMS) match case-sensitively; everything else is case-folded.
class AliasTable {
 public:
  AliasTable() = default;
  static AliasTable parse(std::string_view tsv);
  static const AliasTable& defaults();

  void add(const std::string& a, const std::string& b);
  /// Group id of a term, or -1.
  int group(std::string_view term) const;
  bool same(std::string_view a, std::string_view b) const;
  /// All terms with their group ids, longest first.
  std::vector<std::pair<std::string, int>> terms() const;

 private:
  std::string key(std::string_view term) const;
  int find(int x) const;

  std::map<std::string, int> ids_;
  mutable std::vector<int> parent_;
};

bool are_coreferent(const nlp::NounPhrase& a, const nlp::NounPhrase& b,
                    const AliasTable& aliases = AliasTable::defaults());

enum class CollisionReason { embedding_similarity, id_like_span, entity_common_noun_overlap };
const char* to_string(CollisionReason r) noexcept;

struct CollisionPair {
  nlp::NounPhrase left;
  nlp::NounPhrase right;
  double similarity = 0.0;
  CollisionReason reason = CollisionReason::embedding_similarity;
};

struct CollisionConfig {
  double threshold = 0.75;
};

std::vector<CollisionPair> detect_collisions(const std::vector<nlp::NounPhrase>& nps,
                                             EmbeddingProvider& provider,
                                             const CollisionConfig& config = {},
                                             const AliasTable& aliases = AliasTable::defaults(),
                                             EmbeddingCache* cache = nullptr);

/// Proper names carrying a corporate suffix ("Cruise LLC") that share a word
/// with a common-noun phrase ("cruise control") in the same phrase list.
std::vector<CollisionPair> entity_common_noun_overlaps(const std::vector<nlp::NounPhrase>& nps);

}  // namespace acurai
