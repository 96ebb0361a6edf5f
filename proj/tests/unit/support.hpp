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
#include <fstream>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "acurai/harness.hpp"
#include "acurai/llm.hpp"

namespace acurai::testing {

inline std::string fixture(const std::string& rel) { return std::string(ACURAI_FIXTURE_DIR) + "/" + rel; }

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  return j;
}

inline EvalRecord record(const std::string& name) { return record_from_json(read_json(fixture("records/" + name + ".json"))); }

inline ScriptedClient corpus_script() { return ScriptedClient::from_json(read_json(fixture("scripts/corpus.json"))); }

// Delegates to a function and counts calls.
class LambdaClient final : public ChatClient {
 public:
  explicit LambdaClient(std::function<ChatResponse(const ChatRequest&)> fn) : fn_(std::move(fn)) {}
  ChatResponse chat(const ChatRequest& r) override {
    ++calls;
    return fn_(r);
  }
  std::atomic<int> calls{0};

 private:
  std::function<ChatResponse(const ChatRequest&)> fn_;
};

inline bool is_answer_request(const ChatRequest& r) {
  return !r.messages.empty() && r.messages.front().content.rfind("Answer using only", 0) == 0;
}

}  // namespace acurai::testing
