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

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace acurai {

enum class Verdict { faithful, hallucination };
const char* to_string(Verdict v) noexcept;

struct SupportResult {
  bool supported = false;
  std::optional<std::string> best_match;
  double score = 0.0;
  std::vector<std::string> missing;  // content items absent from the best source
  std::vector<std::string> reasons;  // failed rules other than coverage
};

struct StatementResult {
  std::string statement;
  bool supported = false;
  std::optional<std::string> best_match;
  double score = 0.0;
  std::vector<std::string> missing;
  std::vector<std::string> reasons;
};

struct FaithfulnessReport {
  Verdict verdict = Verdict::faithful;
  std::vector<StatementResult> statement_results;
  std::vector<std::string> normalizations_applied;
  bool empty = false;  // vacuously faithful: no statements to check

  std::vector<std::string> unsupported() const;
};

/// Canonical comparison form: lower-cased, escapes decoded, lemmatized, with
/// centuries and decades folded together ("late 18th century" and "late 1700s"
/// both become "late C18") and possessives turned into "of" phrases.
std::string normalize(const std::string& text);

/// Declarative sentences of a response. Layout lines (a bold title,
/// "Specifics", "Detail N:", markdown headings) are not statements.
std::vector<std::string> segment_response(const std::string& response);

/// A statement is supported by a source when every content item (lemma,
/// number, unit) is found in it, every number matches exactly, relational
/// locations ("base of X") name the same X, and any negation is present there.
SupportResult is_supported(const std::string& statement, const std::vector<std::string>& sources);

FaithfulnessReport check_response(const std::string& response, const std::vector<std::string>& sources);

nlohmann::json to_json(const FaithfulnessReport& report);

}  // namespace acurai
