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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace acurai {

enum class Role { system, user, assistant };
const char* to_string(Role r) noexcept;

struct Message {
  Role role = Role::user;
  std::string content;
};

struct ChatRequest {
  std::string model;
  double temperature = 0.0;
  std::vector<Message> messages;
  std::optional<int> max_tokens;

  /// Throws invalid-input unless messages are non-empty, the first non-system
  /// message is from the user and temperature is non-negative.
  void validate() const;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string content;
  std::string model;
  Usage usage;
  long long latency_ms = 0;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse chat(const ChatRequest& request) = 0;
};

/// Chat-completions wire body: {"model", "messages", "temperature"[, "max_tokens"]}.
nlohmann::json to_wire_json(const ChatRequest& request);

/// Bundled prompt template by name (see resources/prompts.json).
const std::string& prompt_template(const std::string& name);
/// Replaces each "{key}" in `tmpl` with its value.
std::string fill_template(std::string tmpl, const std::map<std::string, std::string>& values);

/// SHA-256 over the canonical JSON of (messages, model, temperature).
std::string record_replay_key(const ChatRequest& request);

struct CassetteEntry {
  std::string content;
  std::string model;
};

/// Recorded responses keyed by request hash: {"<hash>": {"content", "model"}}.
class Cassette {
 public:
  static std::shared_ptr<Cassette> load(const std::string& path);
  static std::shared_ptr<Cassette> load_or_empty(const std::string& path);
  void save(const std::string& path) const;

  std::optional<CassetteEntry> get(const std::string& key) const;
  /// Refuses to replace an existing key unless `force`; returns whether stored.
  bool put(const std::string& key, const CassetteEntry& entry, bool force = false);
  std::size_t size() const;
  nlohmann::json to_json() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, CassetteEntry> entries_;
};

class ReplayClient final : public ChatClient {
 public:
  explicit ReplayClient(std::shared_ptr<Cassette> cassette) : cassette_(std::move(cassette)) {}
  ChatResponse chat(const ChatRequest& request) override;
  std::size_t hits() const noexcept { return hits_.load(); }

 private:
  std::shared_ptr<Cassette> cassette_;
  std::atomic<std::size_t> hits_{0};
};

/// Forwards to `inner` and stores every exchange in the cassette.
class RecordingClient final : public ChatClient {
 public:
  RecordingClient(ChatClient& inner, std::shared_ptr<Cassette> cassette, bool force = false)
      : inner_(inner), cassette_(std::move(cassette)), force_(force) {}
  ChatResponse chat(const ChatRequest& request) override;
  std::size_t refused() const noexcept { return refused_.load(); }

 private:
  ChatClient& inner_;
  std::shared_ptr<Cassette> cassette_;
  bool force_;
  std::atomic<std::size_t> refused_{0};
};

/// Deterministic stand-in for a model: the first rule whose `match` substring
/// occurs in the last user message answers; otherwise `fallback` is returned.
class ScriptedClient final : public ChatClient {
 public:
  struct Rule {
    std::string match;
    std::string response;
    std::string system_match;  // optional; must occur in the system message
  };

  ScriptedClient(std::vector<Rule> rules, std::string fallback, std::string model = "scripted");
  static ScriptedClient from_json(const nlohmann::json& j);
  ChatResponse chat(const ChatRequest& request) override;

 private:
  std::vector<Rule> rules_;
  std::string fallback_;
  std::string model_;
};

struct HttpChatConfig {
  std::string base_url;  // ACURAI_LLM_BASE_URL when empty
  std::string api_key;   // ACURAI_LLM_API_KEY when empty
  int max_attempts = 3;
  std::chrono::milliseconds backoff{500};
  std::chrono::seconds timeout{60};
};

/// Chat-completions over HTTP(S). Retries 429 and 5xx responses and transport
/// failures with exponential backoff; in-flight calls share a global limit.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(HttpChatConfig config);
  ChatResponse chat(const ChatRequest& request) override;

  static void set_max_in_flight(std::ptrdiff_t n);

 private:
  HttpChatConfig config_;
  std::string origin_;
  std::string path_;
};

}  // namespace acurai
