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

#include <filesystem>
#include <thread>

#include "acurai/app.hpp"
#include "acurai/error.hpp"
#include "support.hpp"

using namespace acurai;
using acurai::testing::LambdaClient;

namespace {

nlohmann::json ice_body() {
  const auto rec = acurai::testing::record("7969");
  return {{"query", rec.query}, {"passages", rec.passages}};
}

AppConfig ice_config() {
  AppConfig c;
  c.pipeline.model = acurai::testing::record("7969").model;
  return c;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "acurai");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("gateway over http") {
  ReplayClient replay(Cassette::load(acurai::testing::fixture("cassettes/corpus.json")));
  HashedNgramProvider emb;
  Gateway gw(ice_config(), replay, emb);
  const int port = gw.bind("127.0.0.1", 0);
  gw.start();
  httplib::Client c("127.0.0.1", port);

  auto health = c.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  const auto hj = nlohmann::json::parse(health->body);
  CHECK(hj["status"] == "ok");
  CHECK(hj["embedder"] == "hashed-ngram-64-v1");

  auto empty = c.Post("/v1/answer", nlohmann::json{{"query", "q"}, {"passages", nlohmann::json::array()}}.dump(),
                      "application/json");
  REQUIRE(empty);
  CHECK(empty->status == 400);
  const auto ej = nlohmann::json::parse(empty->body);
  CHECK(ej["error"] == "invalid-input");
  CHECK(ej["fields"][0]["field"] == "passages");

  auto ok = c.Post("/v1/answer", ice_body().dump(), "application/json");
  REQUIRE(ok);
  CHECK(ok->status == 200);
  const auto oj = nlohmann::json::parse(ok->body);
  CHECK(oj["verdict"] == "faithful");
  CHECK(oj["answer"].get<std::string>().rfind("**Benefits of Ice for Neck**", 0) == 0);
  CHECK(oj["timings"].contains("answer"));
  const auto rec = acurai::testing::record("7969");
  CHECK(check_response(oj["answer"], rec.passages).verdict == Verdict::faithful);

  auto tr = c.Get("/v1/trace/" + oj["trace_id"].get<std::string>());
  REQUIRE(tr);
  CHECK(tr->status == 200);
  CHECK(nlohmann::json::parse(tr->body)["final"]["verdict"] == "faithful");
  auto missing = c.Get("/v1/trace/ffffffffffffffff");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  // Concurrent requests do not interfere with each other.
  std::vector<std::thread> ts;
  std::vector<std::string> answers(4);
  for (int i = 0; i < 4; ++i) {
    ts.emplace_back([&, i] {
      httplib::Client ci("127.0.0.1", port);
      auto r = ci.Post("/v1/answer", ice_body().dump(), "application/json");
      if (r && r->status == 200) answers[i] = nlohmann::json::parse(r->body)["answer"];
    });
  }
  for (auto& t : ts) t.join();
  for (const auto& a : answers) CHECK(a == oj["answer"].get<std::string>());

  gw.stop();
}

TEST_CASE("request validation") {
  LambdaClient never([](const ChatRequest&) -> ChatResponse { throw LlmError(ErrorKind::network, "unused"); });
  HashedNgramProvider emb;
  Gateway gw(AppConfig{}, never, emb);
  auto status = [&](const std::string& body) { return gw.answer(body).first; };
  CHECK(status("not json") == 400);
  CHECK(status("[]") == 400);
  CHECK(status(R"({"passages": ["p"]})") == 400);
  CHECK(status(R"({"query": "  ", "passages": ["p"]})") == 400);
  CHECK(status(R"({"query": "q", "passages": ["p", 3]})") == 400);
  CHECK(status(R"({"query": "q", "passages": ["p"], "extra": 1})") == 400);
  CHECK(status(R"({"query": "q", "passages": ["p"], "options": {"threshold": 2}})") == 400);
  const auto [s, j] = gw.answer(R"({"query": "q", "passages": ["p"], "options": {"colour": 1}})");
  CHECK(s == 400);
  CHECK(j["fields"][0]["field"] == "options");
  CHECK(never.calls == 0);
}

TEST_CASE("backend failures map to 502") {
  LambdaClient limited([](const ChatRequest&) -> ChatResponse {
    throw LlmError(ErrorKind::rate_limited, "slow down", std::chrono::seconds(7));
  });
  HashedNgramProvider emb;
  AppConfig cfg;
  cfg.pipeline.llm_rewrite = false;
  Gateway gw(cfg, limited, emb);
  const int port = gw.bind("127.0.0.1", 0);
  gw.start();
  httplib::Client c("127.0.0.1", port);
  auto r = c.Post("/v1/answer",
                  nlohmann::json{{"query", "What is the melting point of calcium?"},
                                 {"passages", {"Calcium melts at 840°C."}}}
                      .dump(),
                  "application/json");
  REQUIRE(r);
  CHECK(r->status == 502);
  CHECK(r->get_header_value("Retry-After") == "7");
  const auto j = nlohmann::json::parse(r->body);
  CHECK(j["error"] == to_string(ErrorKind::rate_limited));
  // The partial trace is kept for inspection.
  auto tr = c.Get("/v1/trace/" + j["trace_id"].get<std::string>());
  REQUIRE(tr);
  CHECK(tr->status == 200);
  gw.stop();
}

TEST_CASE("port in use is a startup error") {
  LambdaClient none([](const ChatRequest&) { return ChatResponse{}; });
  HashedNgramProvider emb;
  Gateway first(AppConfig{}, none, emb);
  const int port = first.bind("127.0.0.1", 0);
  Gateway second(AppConfig{}, none, emb);
  try {
    second.bind("127.0.0.1", port);
    FAIL("expected bind failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::network);
  }
}

TEST_CASE("client stack") {
  AppConfig cfg;
  ClientOptions both;
  both.replay = acurai::testing::fixture("cassettes/corpus.json");
  both.script = acurai::testing::fixture("scripts/corpus.json");
  CHECK_THROWS_AS(ClientStack(cfg, both), Error);

  const auto path = (std::filesystem::temp_directory_path() / "acurai_stack_cassette.json").string();
  std::filesystem::remove(path);
  {
    ClientOptions rec;
    rec.script = acurai::testing::fixture("scripts/corpus.json");
    rec.record = path;
    ClientStack stack(cfg, rec);
    ChatRequest r;
    r.messages = {{Role::user, "anything"}};
    CHECK(stack.client().chat(r).content == "NONE");
  }
  CHECK(Cassette::load(path)->size() == 1);
  std::filesystem::remove(path);
}

TEST_CASE("cli exit codes") {
  CHECK(cli({"wilson", "37", "37"}) == 0);
  CHECK(cli({"wilson", "38", "37"}) == 1);
  CHECK(cli({"--help"}) == 0);
  CHECK(cli({"no-such-command"}) == 2);
  CHECK(cli({"wilson"}) == 2);
  CHECK(cli({"eval", "/nonexistent/missing.jsonl"}) == 1);
  CHECK(cli({"--replay", acurai::testing::fixture("cassettes/corpus.json"), "run",
             acurai::testing::fixture("records/7969.json")}) == 0);
  CHECK(cli({"--replay", acurai::testing::fixture("cassettes/corpus.json"), "eval",
             acurai::testing::fixture("records4.jsonl")}) == 0);
  CHECK(cli({"--config", "/nonexistent/config.json", "wilson", "1", "2"}) == 1);
}
