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
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "acurai/pipeline.hpp"

namespace acurai {

enum class DatasetLabel { gpt35_subtle, gpt35_evident, gpt4_subtle, gpt4_evident, other };
const char* to_string(DatasetLabel d) noexcept;
DatasetLabel dataset_label_from_string(const std::string& s);

struct EvalRecord {
  std::string response_id;
  std::string query;
  std::vector<std::string> passages;
  std::string model;
  std::optional<std::string> original_response;
  DatasetLabel dataset = DatasetLabel::other;
  std::optional<double> temperature;
};

EvalRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalRecord& r);

struct LoadError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadResult {
  std::vector<EvalRecord> records;
  std::vector<LoadError> errors;
};

/// JSONL, one record per line. Malformed lines are reported, not dropped
/// silently. Throws io when unreadable, empty-dataset when nothing is valid.
LoadResult load_dataset(const std::string& path);

/// Standard Wilson score interval, clamped to [0, 1].
std::pair<double, double> wilson_interval(long long successes, long long n, double z = 1.96);

/// "[0.91, 1]": fixed decimals with trailing zeros dropped.
std::string format_interval(double low, double high, int decimals = 2);

struct RecordVerdict {
  std::string response_id;
  DatasetLabel dataset = DatasetLabel::other;
  std::string verdict;  // faithful | hallucination | error
  bool success = false;
  std::string reason;
  std::string response;
  std::string trace_id;
  std::vector<std::string> unsupported;
};

struct EvalSummary {
  std::size_t n = 0;
  std::size_t successes = 0;
  double accuracy = 0.0;
  double z = 1.96;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
  bool temperature_defaulted = false;  // some record carried no generation temperature
  std::vector<RecordVerdict> verdicts;  // in input order

  bool all_faithful() const noexcept { return n > 0 && successes == n; }
};

nlohmann::json to_json(const EvalSummary& s);
std::string to_csv(const EvalSummary& s);

struct EvalOptions {
  PipelineConfig pipeline;
  std::size_t workers = 1;
  double z = 1.96;
  std::string trace_dir;  // one trace file per record when set
};

/// Runs the pipeline per record and compares the output with the record's
/// original passages. Per-record errors count as failures.
EvalSummary evaluate(const std::vector<EvalRecord>& records, const EvalOptions& options, ChatClient& llm,
                     EmbeddingProvider& embedder);

/// Joins RAGTruth source_info.jsonl and response.jsonl into EvalRecords
/// (question-answering items only).
std::vector<EvalRecord> convert_ragtruth(const std::string& source_info_path, const std::string& response_path,
                                         bool conflicts_only = false);

void write_jsonl(const std::vector<EvalRecord>& records, const std::string& path);

}  // namespace acurai
