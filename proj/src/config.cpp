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

#include "acurai/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "acurai/error.hpp"

namespace acurai {

namespace {

void check_keys(const nlohmann::json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw Error(ErrorKind::config, where + " must be a JSON object");
  for (const auto& el : j.items()) {
    if (!allowed.count(el.key())) throw Error(ErrorKind::config, "unknown config key " + where + "." + el.key());
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const std::exception&) {
    throw Error(ErrorKind::config, "config key " + where + "." + key + " has the wrong type");
  }
}

}  // namespace

void apply_pipeline_overrides(PipelineConfig& p, const nlohmann::json& j, const std::string& where) {
  check_keys(j, where,
             {"model", "temperature", "threshold", "split_cap", "retries", "include_specifics", "workers",
              "placeholder_prefix", "llm_rewrite", "max_statement_tokens"});
  read(j, "model", p.model, where);
  read(j, "temperature", p.temperature, where);
  read(j, "threshold", p.threshold, where);
  read(j, "split_cap", p.split_cap, where);
  read(j, "retries", p.retries, where);
  read(j, "include_specifics", p.include_specifics, where);
  read(j, "workers", p.workers, where);
  read(j, "placeholder_prefix", p.placeholder_prefix, where);
  read(j, "llm_rewrite", p.llm_rewrite, where);
  read(j, "max_statement_tokens", p.max_statement_tokens, where);
}

AppConfig AppConfig::from_json(const nlohmann::json& j) {
  AppConfig c;
  check_keys(j, "config", {"pipeline", "llm", "embedding", "eval", "gateway"});
  if (j.contains("pipeline")) apply_pipeline_overrides(c.pipeline, j["pipeline"]);
  if (j.contains("llm")) {
    const auto& l = j["llm"];
    check_keys(l, "llm", {"base_url", "api_key", "max_attempts", "backoff_ms", "timeout_s", "max_in_flight"});
    read(l, "base_url", c.llm.base_url, "llm");
    read(l, "api_key", c.llm.api_key, "llm");
    read(l, "max_attempts", c.llm.max_attempts, "llm");
    read(l, "max_in_flight", c.llm_max_in_flight, "llm");
    long long backoff = c.llm.backoff.count();
    long long timeout = c.llm.timeout.count();
    read(l, "backoff_ms", backoff, "llm");
    read(l, "timeout_s", timeout, "llm");
    c.llm.backoff = std::chrono::milliseconds(backoff);
    c.llm.timeout = std::chrono::seconds(timeout);
  }
  if (j.contains("embedding")) {
    const auto& e = j["embedding"];
    check_keys(e, "embedding", {"provider", "url", "model", "api_key", "batch_size", "max_attempts"});
    read(e, "provider", c.embedder, "embedding");
    read(e, "url", c.embedding.url, "embedding");
    read(e, "model", c.embedding.model, "embedding");
    read(e, "api_key", c.embedding.api_key, "embedding");
    read(e, "batch_size", c.embedding.batch_size, "embedding");
    read(e, "max_attempts", c.embedding.max_attempts, "embedding");
    if (c.embedder != "hashed" && c.embedder != "http") {
      throw Error(ErrorKind::config, "embedding.provider must be \"hashed\" or \"http\"");
    }
  }
  if (j.contains("eval")) {
    check_keys(j["eval"], "eval", {"workers", "z"});
    read(j["eval"], "workers", c.eval_workers, "eval");
    read(j["eval"], "z", c.z, "eval");
  }
  if (j.contains("gateway")) {
    check_keys(j["gateway"], "gateway", {"host", "port", "trace_dir"});
    read(j["gateway"], "host", c.host, "gateway");
    read(j["gateway"], "port", c.port, "gateway");
    read(j["gateway"], "trace_dir", c.trace_dir, "gateway");
  }
  c.pipeline.validate();
  return c;
}

nlohmann::json AppConfig::to_json() const {
  return {{"pipeline", pipeline.to_json()},
          {"llm", {{"base_url", llm.base_url}, {"max_attempts", llm.max_attempts},
                   {"backoff_ms", llm.backoff.count()}, {"timeout_s", llm.timeout.count()},
                   {"max_in_flight", llm_max_in_flight}}},
          {"embedding", {{"provider", embedder}, {"url", embedding.url}, {"model", embedding.model}}},
          {"eval", {{"workers", eval_workers}, {"z", z}}},
          {"gateway", {{"host", host}, {"port", port}, {"trace_dir", trace_dir}}}};
}

void apply_env_overrides(AppConfig& config) {
  if (const char* v = std::getenv("ACURAI_LLM_API_KEY"); v && *v) config.llm.api_key = v;
  if (const char* v = std::getenv("ACURAI_LLM_BASE_URL"); v && *v) config.llm.base_url = v;
  if (const char* v = std::getenv("ACURAI_EMBED_API_KEY"); v && *v) config.embedding.api_key = v;
}

AppConfig load_config(const std::optional<std::string>& path) {
  std::optional<std::string> p = path;
  if (!p) {
    if (const char* v = std::getenv("ACURAI_CONFIG"); v && *v) p = std::string(v);
  }
  AppConfig c;
  if (p) {
    std::ifstream in(*p);
    if (!in) throw Error(ErrorKind::io, "cannot open config file: " + *p);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::config, "config file " + *p + " is not valid JSON: " + e.what());
    }
    c = AppConfig::from_json(j);
  }
  apply_env_overrides(c);
  return c;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const AppConfig& config) {
  if (config.embedder == "http") return std::make_unique<HttpEmbeddingProvider>(config.embedding);
  return std::make_unique<HashedNgramProvider>();
}

}  // namespace acurai
