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

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "acurai/config.hpp"
#include "acurai/llm.hpp"

namespace httplib {
class Server;
}

namespace acurai {

struct ClientOptions {
  std::string script;  // ScriptedClient rules file
  std::string replay;  // cassette to answer from
  std::string record;  // cassette to write
  bool force = false;  // allow overwriting recorded entries
};

/// Owns a chat client together with whatever it wraps. Recording flushes the
/// cassette on save() and on destruction.
class ClientStack {
 public:
  ClientStack(const AppConfig& config, const ClientOptions& options);
  ~ClientStack();
  ClientStack(const ClientStack&) = delete;
  ClientStack& operator=(const ClientStack&) = delete;

  ChatClient& client() { return *top_; }
  void save();

 private:
  std::unique_ptr<ChatClient> base_;
  std::unique_ptr<ChatClient> recorder_;
  std::shared_ptr<Cassette> record_cassette_;
  std::string record_path_;
  ChatClient* top_ = nullptr;
};

/// HTTP front end:
///   POST /v1/answer      {"query", "passages"} -> {"answer", "verdict", "trace_id", "timings"}
///   GET  /v1/trace/{id}  trace of an earlier answer
///   GET  /healthz
class Gateway {
 public:
  Gateway(AppConfig config, ChatClient& llm, EmbeddingProvider& embedder);
  ~Gateway();

  /// Binds and returns the bound port (pass 0 for an ephemeral one).
  int bind(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void serve();
  /// Serves on a background thread.
  void start();
  void stop();

  /// Request handling without the transport; returns (status, body).
  std::pair<int, nlohmann::json> answer(const std::string& body, std::optional<long long>* retry_after = nullptr);
  std::optional<nlohmann::json> trace(const std::string& id) const;

  static constexpr std::size_t kMaxTraces = 1024;

 private:
  AppConfig config_;
  ChatClient& llm_;
  EmbeddingProvider& embedder_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;

  mutable std::mutex mu_;
  std::map<std::string, nlohmann::json> traces_;
  std::vector<std::string> order_;
};

/// Entry point of the `acurai` tool. Returns the process exit code:
/// 0 on success, 1 on runtime failure, 2 on usage errors.
int cli_main(int argc, char** argv);

}  // namespace acurai
