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

#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "acurai/collision.hpp"
#include "acurai/llm.hpp"
#include "acurai/pipeline.hpp"

namespace acurai {

struct AppConfig {
  PipelineConfig pipeline;

  HttpChatConfig llm;
  std::size_t llm_max_in_flight = 4;

  std::string embedder = "hashed";  // "hashed" (offline) or "http"
  HttpEmbeddingConfig embedding;

  std::size_t eval_workers = 1;
  double z = 1.96;

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string trace_dir;

  /// Unknown keys are rejected so that typos do not pass silently.
  static AppConfig from_json(const nlohmann::json& j);
  /// Secrets are omitted.
  nlohmann::json to_json() const;
};

/// Overlays the keys present in `j` onto `p`. Unknown keys and wrong types
/// raise config errors naming `where.key`.
void apply_pipeline_overrides(PipelineConfig& p, const nlohmann::json& j, const std::string& where = "pipeline");

/// Reads `path` (or $ACURAI_CONFIG when no path is given; defaults otherwise),
/// then applies environment overrides: ACURAI_LLM_API_KEY, ACURAI_LLM_BASE_URL,
/// ACURAI_EMBED_API_KEY.
AppConfig load_config(const std::optional<std::string>& path = std::nullopt);
void apply_env_overrides(AppConfig& config);

std::unique_ptr<EmbeddingProvider> make_embedder(const AppConfig& config);

}  // namespace acurai
