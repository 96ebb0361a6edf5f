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

#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include <nlohmann/json.hpp>

#include "acurai/error.hpp"
#include "acurai/llm.hpp"
#include "support.hpp"

using namespace acurai;

namespace {

ChatRequest request(const std::string& user, double temperature = 0.0) {
  ChatRequest r;
  r.model = "gpt-4-0613";
  r.temperature = temperature;
  r.messages = {{Role::system, "Answer using only the facts."}, {Role::user, user}};
  return r;
}

// Chat-completions stub. The behaviour per call comes from `plan`.
struct Stub {
  httplib::Server srv;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};

  explicit Stub(std::function<void(int, const httplib::Request&, httplib::Response&)> plan) {
    srv.Post("/v1/chat/completions", [this, plan](const httplib::Request& req, httplib::Response& res) {
      const int now = ++in_flight;
      int p = peak.load();
      while (now > p && !peak.compare_exchange_weak(p, now)) {
      }
      plan(hits++, req, res);
      --in_flight;
    });
    port = srv.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { srv.listen_after_bind(); });
    srv.wait_until_ready();
  }
  ~Stub() {
    srv.stop();
    thread.join();
  }
  HttpChatConfig config() const {
    HttpChatConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port);
    c.api_key = "test-key";
    c.backoff = std::chrono::milliseconds(1);
    c.timeout = std::chrono::seconds(5);
    return c;
  }
};

void ok(httplib::Response& res, const std::string& content) {
  res.set_content(nlohmann::json{{"model", "stub-model"},
                                 {"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
                                 {"usage", {{"prompt_tokens", 7}, {"completion_tokens", 3}}}}
                      .dump(),
                  "application/json");
}

}  // namespace

TEST_CASE("request validation") {
  CHECK_NOTHROW(request("hi").validate());
  ChatRequest empty;
  CHECK_THROWS_AS(empty.validate(), Error);
  auto neg = request("hi", -0.5);
  CHECK_THROWS_AS(neg.validate(), Error);
  ChatRequest assistant_first;
  assistant_first.messages = {{Role::assistant, "hello"}, {Role::user, "hi"}};
  CHECK_THROWS_AS(assistant_first.validate(), Error);
}

TEST_CASE("wire body") {
  auto r = request("hi", 0.2);
  r.max_tokens = 64;
  const auto j = to_wire_json(r);
  CHECK(j["model"] == "gpt-4-0613");
  CHECK(j["temperature"] == 0.2);
  CHECK(j["max_tokens"] == 64);
  CHECK(j["messages"][0]["role"] == "system");
  CHECK(j["messages"][1]["content"] == "hi");
}

TEST_CASE("templates") {
  CHECK(fill_template("Hello {name}, {name}!", {{"name", "Ada"}}) == "Hello Ada, Ada!");
  CHECK(fill_template("{missing}", {}) == "{missing}");
  CHECK_FALSE(prompt_template("fff_system").empty());
  CHECK_THROWS_AS(prompt_template("no_such_template"), Error);
}

TEST_CASE("record-replay keys") {
  CHECK(record_replay_key(request("a")) == record_replay_key(request("a")));
  CHECK(record_replay_key(request("a")).size() == 64);
  CHECK(record_replay_key(request("a", 0.0)) != record_replay_key(request("a", 0.7)));
  CHECK(record_replay_key(request("a")) != record_replay_key(request("b")));
  auto other = request("a");
  other.model = "gpt-3.5-turbo-0613";
  CHECK(record_replay_key(request("a")) != record_replay_key(other));
}

TEST_CASE("replay hits and misses") {
  auto cas = std::make_shared<Cassette>();
  const auto req = request("What melts at 840°C?");
  cas->put(record_replay_key(req), {"Calcium melts at 840°C.", "gpt-4-0613"});
  ReplayClient replay(cas);
  CHECK(replay.chat(req).content == "Calcium melts at 840°C.");
  CHECK(replay.hits() == 1);

  const auto miss = request("Something else");
  try {
    replay.chat(miss);
    FAIL("expected a missing fixture");
  } catch (const LlmError& e) {
    CHECK(e.kind() == ErrorKind::missing_fixture);
    CHECK(std::string(e.what()).find(record_replay_key(miss)) != std::string::npos);
  }
}

TEST_CASE("recording refuses to overwrite unless forced") {
  ScriptedClient first({{"", "one", ""}}, "NONE");
  ScriptedClient second({{"", "two", ""}}, "NONE");
  auto cas = std::make_shared<Cassette>();
  const auto req = request("q");

  RecordingClient rec1(first, cas);
  rec1.chat(req);
  RecordingClient rec2(second, cas);
  CHECK(rec2.chat(req).content == "two");
  CHECK(rec2.refused() == 1);
  CHECK(cas->get(record_replay_key(req))->content == "one");

  RecordingClient forced(second, cas, true);
  forced.chat(req);
  CHECK(forced.refused() == 0);
  CHECK(cas->get(record_replay_key(req))->content == "two");

  const auto path = (std::filesystem::temp_directory_path() / "acurai_test_cassette.json").string();
  cas->save(path);
  const auto loaded = Cassette::load(path);
  CHECK(loaded->size() == 1);
  CHECK(loaded->to_json() == cas->to_json());
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Cassette::load(path), Error);
  CHECK(Cassette::load_or_empty(path)->size() == 0);
}

TEST_CASE("scripted client") {
  const auto j = nlohmann::json::parse(R"({
    "fallback": "NONE",
    "rules": [
      {"system": "Rewrite", "match": "calcium", "response": ["Calcium melts.", "Calcium boils."]},
      {"match": "calcium", "response": "plain"}
    ]})");
  auto s = ScriptedClient::from_json(j);
  ChatRequest rw;
  rw.messages = {{Role::system, "Rewrite the sentence."}, {Role::user, "about calcium"}};
  CHECK(s.chat(rw).content == "Calcium melts.\nCalcium boils.");
  CHECK(s.chat(request("about calcium")).content == "plain");
  CHECK(s.chat(request("about argon")).content == "NONE");
}

TEST_CASE("http client parses a 200") {
  std::string auth;
  Stub stub([&](int, const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    ok(res, "Calcium melts at 840°C.");
  });
  HttpChatClient c(stub.config());
  const auto r = c.chat(request("q"));
  CHECK(r.content == "Calcium melts at 840°C.");
  CHECK(r.model == "stub-model");
  CHECK(r.usage.prompt_tokens == 7);
  CHECK(auth == "Bearer test-key");
}

TEST_CASE("http client retries rate limits") {
  Stub stub([](int n, const httplib::Request&, httplib::Response& res) {
    if (n == 0) {
      res.status = 429;
      res.set_header("Retry-After", "0");
      return;
    }
    ok(res, "after retry");
  });
  HttpChatClient c(stub.config());
  CHECK(c.chat(request("q")).content == "after retry");
  CHECK(stub.hits == 2);
}

TEST_CASE("http client error kinds") {
  SUBCASE("auth is not retried") {
    Stub stub([](int, const httplib::Request&, httplib::Response& res) { res.status = 401; });
    HttpChatClient c(stub.config());
    try {
      c.chat(request("q"));
      FAIL("expected auth");
    } catch (const LlmError& e) {
      CHECK(e.kind() == ErrorKind::auth);
    }
    CHECK(stub.hits == 1);
  }
  SUBCASE("malformed body") {
    Stub stub([](int, const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"choices\": []}", "application/json");
    });
    HttpChatClient c(stub.config());
    CHECK_THROWS_WITH_AS(c.chat(request("q")), doctest::Contains("malformed"), LlmError);
  }
  SUBCASE("server errors exhaust attempts") {
    Stub stub([](int, const httplib::Request&, httplib::Response& res) { res.status = 500; });
    auto cfg = stub.config();
    cfg.max_attempts = 3;
    HttpChatClient c(cfg);
    try {
      c.chat(request("q"));
      FAIL("expected provider");
    } catch (const LlmError& e) {
      CHECK(e.kind() == ErrorKind::provider);
    }
    CHECK(stub.hits == 3);
  }
  SUBCASE("rate limit carries retry-after") {
    Stub stub([](int, const httplib::Request&, httplib::Response& res) {
      res.status = 429;
      res.set_header("Retry-After", "0");
    });
    auto cfg = stub.config();
    cfg.max_attempts = 2;
    HttpChatClient c(cfg);
    try {
      c.chat(request("q"));
      FAIL("expected rate limit");
    } catch (const LlmError& e) {
      CHECK(e.kind() == ErrorKind::rate_limited);
      REQUIRE(e.retry_after().has_value());
      CHECK(e.retry_after()->count() == 0);
    }
  }
  SUBCASE("nothing listening") {
    HttpChatConfig cfg;
    cfg.base_url = "http://127.0.0.1:1";
    cfg.max_attempts = 1;
    HttpChatClient c(cfg);
    try {
      c.chat(request("q"));
      FAIL("expected network");
    } catch (const LlmError& e) {
      CHECK((e.kind() == ErrorKind::network || e.kind() == ErrorKind::timeout));
    }
  }
}

TEST_CASE("in-flight limit") {
  Stub stub([](int, const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    ok(res, "x");
  });
  HttpChatClient::set_max_in_flight(2);
  HttpChatClient c(stub.config());
  std::vector<std::thread> ts;
  for (int i = 0; i < 6; ++i) ts.emplace_back([&] { c.chat(request("q")); });
  for (auto& t : ts) t.join();
  CHECK(stub.hits == 6);
  CHECK(stub.peak <= 2);
  HttpChatClient::set_max_in_flight(4);
}
