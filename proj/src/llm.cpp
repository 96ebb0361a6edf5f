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

#include <httplib.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "acurai/error.hpp"
#include "acurai/llm.hpp"
#include "acurai/resources.hpp"
#include "acurai/text.hpp"
#include "internal.hpp"

namespace acurai {

const char* to_string(Role r) noexcept {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

void ChatRequest::validate() const {
  if (messages.empty()) throw Error(ErrorKind::invalid_input, "chat request has no messages");
  if (temperature < 0.0) throw Error(ErrorKind::invalid_input, "temperature must be >= 0");
  for (const auto& m : messages) {
    if (m.role == Role::system) continue;
    if (m.role != Role::user) {
      throw Error(ErrorKind::invalid_input, "first non-system message must come from the user");
    }
    return;
  }
  throw Error(ErrorKind::invalid_input, "chat request has no user message");
}

nlohmann::json to_wire_json(const ChatRequest& request) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : request.messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  nlohmann::json j = {{"model", request.model}, {"messages", msgs}, {"temperature", request.temperature}};
  if (request.max_tokens) j["max_tokens"] = *request.max_tokens;
  return j;
}

const std::string& prompt_template(const std::string& name) {
  static const std::map<std::string, std::string> prompts = [] {
    std::map<std::string, std::string> m;
    const auto j = nlohmann::json::parse(resources::prompts());
    for (const auto& el : j.items()) m[el.key()] = el.value().get<std::string>();
    return m;
  }();
  const auto it = prompts.find(name);
  if (it == prompts.end()) throw Error(ErrorKind::config, "unknown prompt template: " + name);
  return it->second;
}

std::string fill_template(std::string tmpl, const std::map<std::string, std::string>& values) {
  for (const auto& [k, v] : values) tmpl = text::replace_all(tmpl, "{" + k + "}", v);
  return tmpl;
}

std::string record_replay_key(const ChatRequest& request) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : request.messages) msgs.push_back({{"content", m.content}, {"role", to_string(m.role)}});
  char temp[32];
  std::snprintf(temp, sizeof temp, "%.6g", request.temperature);
  // nlohmann::json objects keep keys sorted, and dump() without indent emits
  // no insignificant whitespace, so the encoding is canonical.
  const nlohmann::json canon = {{"messages", msgs}, {"model", request.model}, {"temperature", temp}};
  return text::sha256_hex(canon.dump());
}

// ---------------------------------------------------------------------------
// Cassettes

std::shared_ptr<Cassette> Cassette::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open cassette: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::parse, "cassette " + path + " is not valid JSON: " + e.what());
  }
  auto c = std::make_shared<Cassette>();
  if (!j.is_object()) throw Error(ErrorKind::parse, "cassette " + path + " must be a JSON object");
  for (const auto& el : j.items()) {
    const auto& v = el.value();
    c->entries_[el.key()] = CassetteEntry{v.at("content").get<std::string>(), v.value("model", std::string())};
  }
  return c;
}

std::shared_ptr<Cassette> Cassette::load_or_empty(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) return std::make_shared<Cassette>();
  return load(path);
}

nlohmann::json Cassette::to_json() const {
  std::lock_guard<std::mutex> lk(mu_);
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, e] : entries_) j[k] = {{"content", e.content}, {"model", e.model}};
  return j;
}

void Cassette::save(const std::string& path) const {
  const std::string body = to_json().dump(2) + "\n";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write cassette: " + path);
  out << body;
}

std::optional<CassetteEntry> Cassette::get(const std::string& key) const {
  std::lock_guard<std::mutex> lk(mu_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool Cassette::put(const std::string& key, const CassetteEntry& entry, bool force) {
  std::lock_guard<std::mutex> lk(mu_);
  const auto it = entries_.find(key);
  if (it != entries_.end() && !force) return false;
  entries_[key] = entry;
  return true;
}

std::size_t Cassette::size() const {
  std::lock_guard<std::mutex> lk(mu_);
  return entries_.size();
}

ChatResponse ReplayClient::chat(const ChatRequest& request) {
  request.validate();
  const std::string key = record_replay_key(request);
  const auto e = cassette_->get(key);
  if (!e) throw LlmError(ErrorKind::missing_fixture, "no recorded response for request " + key);
  ++hits_;
  return ChatResponse{e->content, e->model, {}, 0};
}

ChatResponse RecordingClient::chat(const ChatRequest& request) {
  ChatResponse r = inner_.chat(request);
  if (!cassette_->put(record_replay_key(request), CassetteEntry{r.content, r.model}, force_)) ++refused_;
  return r;
}

// ---------------------------------------------------------------------------
// Scripted

ScriptedClient::ScriptedClient(std::vector<Rule> rules, std::string fallback, std::string model)
    : rules_(std::move(rules)), fallback_(std::move(fallback)), model_(std::move(model)) {}

ScriptedClient ScriptedClient::from_json(const nlohmann::json& j) {
  std::vector<Rule> rules;
  for (const auto& r : j.value("rules", nlohmann::json::array())) {
    std::string response;
    if (r.at("response").is_array()) {
      response = text::join(r.at("response").get<std::vector<std::string>>(), "\n");
    } else {
      response = r.at("response").get<std::string>();
    }
    rules.push_back(Rule{r.at("match").get<std::string>(), response, r.value("system", std::string())});
  }
  return ScriptedClient(std::move(rules), j.value("default", std::string("NONE")),
                        j.value("model", std::string("scripted")));
}

ChatResponse ScriptedClient::chat(const ChatRequest& request) {
  request.validate();
  std::string user;
  std::string system;
  for (const auto& m : request.messages) {
    if (m.role == Role::user) user = m.content;
    if (m.role == Role::system) system = m.content;
  }
  for (const auto& r : rules_) {
    if (user.find(r.match) == std::string::npos) continue;
    if (!r.system_match.empty() && system.find(r.system_match) == std::string::npos) continue;
    return ChatResponse{r.response, model_, {}, 0};
  }
  return ChatResponse{fallback_, model_, {}, 0};
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

detail::Limiter& chat_limiter() {
  static detail::Limiter l(4);
  return l;
}

std::string env_or(const std::string& value, const char* var) {
  if (!value.empty()) return value;
  const char* v = std::getenv(var);
  return v ? std::string(v) : std::string();
}

}  // namespace

void HttpChatClient::set_max_in_flight(std::ptrdiff_t n) { chat_limiter().set_limit(n); }

HttpChatClient::HttpChatClient(HttpChatConfig config) : config_(std::move(config)) {
  config_.base_url = env_or(config_.base_url, "ACURAI_LLM_BASE_URL");
  config_.api_key = env_or(config_.api_key, "ACURAI_LLM_API_KEY");
  if (config_.base_url.empty()) config_.base_url = "https://api.openai.com";
  if (config_.max_attempts < 1) config_.max_attempts = 1;
  auto parts = detail::split_url(config_.base_url);
  origin_ = parts.origin;
  std::string base_path = parts.path == "/" ? "" : parts.path;
  while (!base_path.empty() && base_path.back() == '/') base_path.pop_back();
  if (base_path.size() >= 17 && base_path.compare(base_path.size() - 17, 17, "/chat/completions") == 0) {
    path_ = base_path;
  } else if (base_path.empty()) {
    path_ = "/v1/chat/completions";
  } else {
    path_ = base_path + "/chat/completions";
  }
}

ChatResponse HttpChatClient::chat(const ChatRequest& request) {
  request.validate();
  const std::string body = to_wire_json(request).dump();
  ErrorKind last_kind = ErrorKind::network;
  std::string last_error;
  std::optional<std::chrono::seconds> retry_after;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    const auto t0 = std::chrono::steady_clock::now();
    httplib::Result res;
    {
      detail::LimiterGuard guard(chat_limiter());
      httplib::Client cli(origin_);
      cli.set_connection_timeout(config_.timeout);
      cli.set_read_timeout(config_.timeout);
      httplib::Headers headers;
      if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
      res = cli.Post(path_, headers, body, "application/json");
    }
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    std::chrono::milliseconds wait = config_.backoff * (1 << (attempt - 1));
    if (!res) {
      last_kind = res.error() == httplib::Error::ConnectionTimeout || res.error() == httplib::Error::Read
                      ? ErrorKind::timeout
                      : ErrorKind::network;
      last_error = "chat request failed: " + httplib::to_string(res.error());
    } else if (res->status == 401 || res->status == 403) {
      throw LlmError(ErrorKind::auth, "LLM provider rejected credentials (HTTP " +
                                          std::to_string(res->status) + ")");
    } else if (res->status == 429) {
      last_kind = ErrorKind::rate_limited;
      last_error = "LLM provider rate limit (HTTP 429)";
      retry_after.reset();
      if (res->has_header("Retry-After")) {
        try {
          retry_after = std::chrono::seconds(std::stoll(res->get_header_value("Retry-After")));
          wait = std::max(wait, std::chrono::duration_cast<std::chrono::milliseconds>(*retry_after));
        } catch (const std::exception&) {
        }
      }
    } else if (res->status >= 500) {
      last_kind = ErrorKind::provider;
      last_error = "LLM provider error (HTTP " + std::to_string(res->status) + ")";
    } else if (res->status != 200) {
      throw LlmError(ErrorKind::provider, "LLM provider returned HTTP " + std::to_string(res->status) +
                                              ": " + res->body.substr(0, 200));
    } else {
      try {
        const auto j = nlohmann::json::parse(res->body);
        ChatResponse out;
        out.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
        out.model = j.value("model", request.model);
        if (j.contains("usage")) {
          out.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
          out.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
        }
        out.latency_ms = elapsed.count();
        return out;
      } catch (const std::exception& e) {
        throw LlmError(ErrorKind::malformed_response, std::string("malformed chat response: ") + e.what());
      }
    }
    if (attempt < config_.max_attempts) std::this_thread::sleep_for(wait);
  }
  throw LlmError(last_kind, last_error + " after " + std::to_string(config_.max_attempts) + " attempts",
                 retry_after);
}

}  // namespace acurai
