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

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "acurai/collision.hpp"
#include "acurai/llm.hpp"
#include "acurai/nlp.hpp"
#include "acurai/query_split.hpp"

namespace acurai {

/// A Fully-Formatted Fact: one simple, self-contained statement.
struct Statement {
  std::string text;
  nlp::NounPhrase subject_np;
  int source_passage_index = 0;
  nlp::Span source_span;       // sentence it came from, in the decoded passage
  bool from_llm = false;
};

struct Section {
  int index = 1;  // 1-based, in passage order
  int passage_index = 0;
  std::vector<Statement> statements;
};

struct FactSet {
  std::optional<nlp::NounPhrase> entity;  // empty for queries without an entity
  std::vector<Section> sections;

  bool empty() const noexcept { return sections.empty(); }
  std::size_t statement_count() const noexcept;
};

struct QueryPacket {
  AtomicQuery atomic_query;
  FactSet fact_set;
  std::string placeholder_table_ref;
  bool empty = false;     // no statements were found for the query's entity
  bool degraded = false;  // the rewrite model failed and only rule-based output is present
  std::vector<std::string> log;
};

struct Violation {
  char rule = 'a';  // 'a' pronoun, 'b' subject, 'c' clause, 'd' length, 'e' collision
  std::string detail;
};

struct ValidationResult {
  std::vector<Violation> violations;
  std::optional<nlp::NounPhrase> subject;

  bool valid() const noexcept { return violations.empty(); }
  bool has(char rule) const noexcept;
};

struct FffConfig {
  EmbeddingProvider* provider = nullptr;  // offline hashed provider when null
  EmbeddingCache* cache = nullptr;
  CollisionConfig collision;
  std::string model = "gpt-4-0613";
  double temperature = 0.0;
  bool use_llm = true;
  std::size_t max_tokens = 40;
  std::size_t workers = 1;
};

/// Checks, in order and exhaustively: (a) no pronoun tokens; (b) a subject
/// phrase coreferent with `entity` (or any subject when there is no entity);
/// (c) exactly one top-level finite verb group; (d) at most max_tokens tokens;
/// (e) no colliding pair of noun phrases inside the statement.
ValidationResult validate_statement(const std::string& s, const std::optional<nlp::NounPhrase>& entity,
                                    const FffConfig& config = {});

struct ExtractionResult {
  std::vector<Statement> statements;
  bool degraded = false;
  std::vector<std::string> log;  // discarded candidates and why
};

/// Escapes decoded ("°C" -> "°C", "m\^3" -> "m^3").
std::string decode_passage(const std::string& passage);

/// Rule-based rewrite first; sentences it cannot validate go to the model,
/// whose lines are re-validated, number-checked and support-checked.
ExtractionResult passage_to_statements(const std::string& passage, int passage_index,
                                       const std::optional<nlp::NounPhrase>& entity, ChatClient* llm,
                                       const FffConfig& config = {});

/// Extraction results keyed by (entity, passage hash); safe to share.
class StatementCache {
 public:
  bool lookup(const std::string& entity, const std::string& passage_hash, ExtractionResult& out) const;
  void store(const std::string& entity, const std::string& passage_hash, const ExtractionResult& r);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, ExtractionResult> entries_;
};

/// One packet per atomic query, in query order. Queries naming the same
/// entity share one extraction per passage.
std::vector<QueryPacket> build_fact_sets(const std::vector<std::string>& passages,
                                         const std::vector<AtomicQuery>& queries, ChatClient* llm,
                                         const FffConfig& config = {}, StatementCache* cache = nullptr);

/// {"entity": str, "sections": [{"index": int, "statements": [str]}]}
nlohmann::json to_json(const FactSet& fs);

/// Entity text as written in statements: determiner dropped, first letter capitalized.
std::string entity_display(const nlp::NounPhrase& np);

}  // namespace acurai
