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

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "acurai/collision.hpp"
#include "acurai/error.hpp"
#include "acurai/faithfulness.hpp"
#include "acurai/fff.hpp"
#include "acurai/llm.hpp"
#include "acurai/placeholder.hpp"
#include "acurai/query_split.hpp"

namespace acurai {

struct PipelineConfig {
  std::string model = "gpt-4-0613";
  double temperature = 0.0;
  double threshold = 0.75;
  std::size_t split_cap = 16;
  int retries = 2;
  bool include_specifics = true;
  std::size_t workers = 1;  // atomic queries answered concurrently
  std::string placeholder_prefix = "QQ";
  bool llm_rewrite = true;  // model-assisted FFF rewriting
  std::size_t max_statement_tokens = 40;

  /// Throws a config error unless 0 < threshold <= 1, retries >= 0,
  /// temperature >= 0 and split_cap >= 1.
  void validate() const;
  nlohmann::json to_json() const;
};

enum class FinalVerdict { faithful, faithful_vacuous, hallucination };
const char* to_string(FinalVerdict v) noexcept;

struct QueryAnswer {
  AtomicQuery query;
  std::string answer;
  bool fallback = false;
  int retries_used = 0;
};

struct PipelineResult {
  std::string response;
  FinalVerdict verdict = FinalVerdict::faithful;
  std::string trace_id;
  nlohmann::json trace;                  // deterministic; no timings
  std::map<std::string, double> timings;  // per-stage milliseconds
  std::vector<QueryAnswer> answers;
  std::vector<QueryPacket> packets;
};

/// Raised when the answering model is unavailable; carries the trace so far.
class PipelineError : public Error {
 public:
  PipelineError(ErrorKind kind, const std::string& message, nlohmann::json partial_trace,
                std::optional<std::chrono::seconds> retry_after = std::nullopt)
      : Error(kind, message), partial_trace_(std::move(partial_trace)), retry_after_(retry_after) {}
  const nlohmann::json& partial_trace() const noexcept { return partial_trace_; }
  std::optional<std::chrono::seconds> retry_after() const noexcept { return retry_after_; }

 private:
  nlohmann::json partial_trace_;
  std::optional<std::chrono::seconds> retry_after_;
};

struct ComposeOptions {
  bool include_specifics = true;
};

/// "**Title**", the answers in query order separated by blank lines, then
/// "**Specifics**" with one "Detail N:" block per statement group.
std::string compose_response(const std::string& title_query, const std::vector<QueryAnswer>& answers,
                             const std::vector<std::vector<std::string>>& details,
                             const ComposeOptions& options = {});

/// Query in title case without its trailing question mark.
std::string title_case(const std::string& query);

/// The facts-only fallback answer: one bullet per statement.
std::string verbatim_answer(const FactSet& fs);

/// "Section N:" blocks of numbered statements, as shown to the model.
std::string render_sections(const FactSet& fs);

PipelineResult run(const std::string& query, const std::vector<std::string>& passages, const PipelineConfig& config,
                   ChatClient& llm, EmbeddingProvider& embedder);

/// Writes <dir>/<trace_id>.json and returns the path.
std::string write_trace(const PipelineResult& result, const std::string& dir);

}  // namespace acurai
