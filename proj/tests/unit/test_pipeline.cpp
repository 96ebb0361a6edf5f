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

#include <filesystem>
#include <regex>

#include "acurai/pipeline.hpp"
#include "support.hpp"

using namespace acurai;
using acurai::testing::LambdaClient;

namespace {

std::shared_ptr<Cassette> cassette(const std::string& name) {
  return Cassette::load(acurai::testing::fixture("cassettes/" + name + ".json"));
}

PipelineConfig config_for(const EvalRecord& rec) {
  PipelineConfig c;
  if (!rec.model.empty()) c.model = rec.model;
  return c;
}

QueryAnswer answer(const std::string& q, const std::string& text) {
  QueryAnswer a;
  a.query.text = q;
  a.answer = text;
  return a;
}

bool has_placeholder(const std::string& s) { return std::regex_search(s, std::regex("\\bQQ[A-Z]+\\b")); }

}  // namespace

TEST_CASE("title case") {
  CHECK(title_case("benefits of ice for neck") == "Benefits of Ice for Neck");
  CHECK(title_case("What are the physical properties of calcium?") == "What Are the Physical Properties of Calcium");
}

TEST_CASE("compose layout") {
  const std::vector<QueryAnswer> one = {answer("benefits of ice for neck", "Ice helps.")};
  const std::vector<std::vector<std::string>> details = {{"Place an ice cube on your neck.", "Wait 20 minutes."}};
  CHECK(compose_response("benefits of ice for neck", one, details) ==
        "**Benefits of Ice for Neck**\n\nIce helps.\n\n**Specifics**\n\nDetail 1:\n"
        "Place an ice cube on your neck. Wait 20 minutes.\n");
  CHECK(compose_response("benefits of ice for neck", one, details, {false}) ==
        "**Benefits of Ice for Neck**\n\nIce helps.\n");

  const std::vector<QueryAnswer> four = {answer("a", "A1."), answer("b", "B1."), answer("c", "C1."),
                                         answer("d", "D1.")};
  const auto merged = compose_response("q", four, {}, {false});
  CHECK(merged.find("A1.\n\nB1.\n\nC1.\n\nD1.") != std::string::npos);
}

TEST_CASE("verbatim fallback and sections") {
  FactSet fs;
  fs.sections.push_back({1, {}});
  fs.sections[0].statements.push_back({"Calcium melts at 840°C."});
  fs.sections[0].statements.push_back({"Calcium is diamagnetic."});
  CHECK(verbatim_answer(fs) == "- Calcium melts at 840°C.\n- Calcium is diamagnetic.");
  const auto r = render_sections(fs);
  CHECK(r.find("Section 1:") != std::string::npos);
  CHECK(r.find("Calcium is diamagnetic.") != std::string::npos);
}

TEST_CASE("config validation") {
  PipelineConfig c;
  CHECK_NOTHROW(c.validate());
  c.threshold = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.threshold = 1.0;
  c.retries = -1;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("ice for neck replays to a faithful answer") {
  const auto rec = acurai::testing::record("7969");
  ReplayClient replay(cassette("corpus"));
  HashedNgramProvider emb;
  const auto r = run(rec.query, rec.passages, config_for(rec), replay, emb);
  CHECK(r.verdict == FinalVerdict::faithful);
  CHECK(check_response(r.response, rec.passages).verdict == Verdict::faithful);
  CHECK(r.response.rfind("**Benefits of Ice for Neck**", 0) == 0);
  CHECK(r.response.find("**Specifics**") != std::string::npos);
  CHECK(r.response.find("Detail 1:") != std::string::npos);
  CHECK(r.trace["final"]["verdict"] == "faithful");
}

TEST_CASE("calcium and magnesium trace") {
  const auto rec = acurai::testing::record("calcium_magnesium");
  ReplayClient replay(cassette("corpus"));
  HashedNgramProvider emb;
  const auto r = run(rec.query, rec.passages, config_for(rec), replay, emb);
  CHECK(r.verdict == FinalVerdict::faithful);
  REQUIRE(r.trace["atomic_queries"].size() == 4);
  CHECK(r.trace["atomic_queries"][0]["text"] == "What are the chemical properties of calcium?");
  CHECK(r.trace["atomic_queries"][3]["text"] == "What are the physical properties of magnesium?");
  CHECK(r.trace["collisions"].size() == 2);
  REQUIRE(r.packets.size() == 4);
  CHECK(entity_display(*r.packets[0].fact_set.entity) == "Calcium");
  CHECK(entity_display(*r.packets[1].fact_set.entity) == "Magnesium");
  // Answers appear in split order.
  std::size_t last = 0;
  for (const auto& a : r.answers) {
    const auto at = r.response.find(a.answer);
    REQUIRE(at != std::string::npos);
    CHECK(at >= last);
    last = at;
  }
}

TEST_CASE("no collisions means one query and one answer call") {
  LambdaClient llm([](const ChatRequest& req) {
    ChatResponse r;
    r.content = acurai::testing::is_answer_request(req) ? "Calcium melts at 840°C." : "NONE";
    return r;
  });
  HashedNgramProvider emb;
  PipelineConfig cfg;
  cfg.llm_rewrite = false;
  const auto r = run("What is the melting point of calcium?", {"Calcium melts at 840°C."}, cfg, llm, emb);
  CHECK(r.answers.size() == 1);
  CHECK(r.packets.size() == 1);
  CHECK(llm.calls == 1);
  CHECK(r.verdict == FinalVerdict::faithful);
}

TEST_CASE("a corrupting model is gated") {
  auto script = acurai::testing::corpus_script();
  LambdaClient liar([&](const ChatRequest& req) {
    if (!acurai::testing::is_answer_request(req)) return script.chat(req);
    ChatResponse r;
    r.content = "Calcium melts at 1200°C. Magnesium is a gas at room temperature.";
    return r;
  });
  const auto rec = acurai::testing::record("calcium_magnesium");
  HashedNgramProvider emb;
  const auto r = run(rec.query, rec.passages, config_for(rec), liar, emb);
  CHECK(r.verdict == FinalVerdict::faithful);
  for (const auto& a : r.answers) {
    CHECK(a.fallback);
    CHECK(a.retries_used == 2);
  }
  CHECK(check_response(r.response, rec.passages).verdict == Verdict::faithful);
  CHECK(r.response.find("1200") == std::string::npos);
}

TEST_CASE("answering model outage carries the partial trace") {
  LambdaClient down([](const ChatRequest& req) -> ChatResponse {
    if (acurai::testing::is_answer_request(req)) throw LlmError(ErrorKind::rate_limited, "slow down", std::chrono::seconds(3));
    ChatResponse r;
    r.content = "NONE";
    return r;
  });
  HashedNgramProvider emb;
  try {
    run("What is the melting point of calcium?", {"Calcium melts at 840°C."}, {}, down, emb);
    FAIL("expected an error");
  } catch (const PipelineError& e) {
    CHECK(e.kind() == ErrorKind::rate_limited);
    REQUIRE(e.retry_after().has_value());
    CHECK(e.retry_after()->count() == 3);
    CHECK(e.partial_trace().contains("packets"));
    CHECK(e.partial_trace()["error"]["kind"] == to_string(ErrorKind::rate_limited));
  }
}

TEST_CASE("no facts at all is vacuous") {
  LambdaClient llm([](const ChatRequest&) {
    ChatResponse r;
    r.content = "NONE";
    return r;
  });
  HashedNgramProvider emb;
  const auto r = run("What is the boiling point of argon?", {"Physical Properties of Argon"}, {}, llm, emb);
  CHECK(r.verdict == FinalVerdict::faithful_vacuous);
  CHECK(r.response.find("No supporting facts") != std::string::npos);
  CHECK(llm.calls == 0);
}

TEST_CASE("placeholders never reach the response") {
  const auto rec = acurai::testing::record("placeholder_demo");
  ReplayClient replay(cassette("corpus"));
  HashedNgramProvider emb;
  const auto r = run(rec.query, rec.passages, config_for(rec), replay, emb);
  CHECK(r.verdict == FinalVerdict::faithful);
  CHECK_FALSE(r.trace["placeholder_table"]["entries"].empty());
  CHECK_FALSE(has_placeholder(r.response));
  CHECK(r.response.find("XR-200") != std::string::npos);
}

TEST_CASE("forced scenarios") {
  const auto manifest = acurai::testing::read_json(acurai::testing::fixture("forced.json"));
  REQUIRE(manifest.size() == 4);
  HashedNgramProvider emb;
  for (const auto& sc : manifest) {
    const std::string name = sc["name"];
    CAPTURE(name);
    const auto rec = acurai::testing::record(sc["record"]);
    ReplayClient replay(Cassette::load(acurai::testing::fixture(sc["cassette"])));
    const auto r = run(rec.query, rec.passages, config_for(rec), replay, emb);
    CHECK(r.verdict == FinalVerdict::faithful);
    CHECK(check_response(r.response, rec.passages).verdict == Verdict::faithful);
    CHECK_FALSE(has_placeholder(r.response));
    std::vector<int> fell;
    for (std::size_t i = 0; i < r.answers.size(); ++i) {
      if (r.answers[i].fallback) fell.push_back(static_cast<int>(i));
    }
    CHECK(fell == sc["expect_fallback"].get<std::vector<int>>());
    if (sc.contains("expect_retries")) CHECK(r.answers[0].retries_used == sc["expect_retries"].get<int>());
  }
}

TEST_CASE("replay is deterministic and worker count does not matter") {
  const auto rec = acurai::testing::record("calcium_magnesium");
  HashedNgramProvider emb;
  ReplayClient a(cassette("corpus"));
  ReplayClient b(cassette("corpus"));
  auto cfg = config_for(rec);
  const auto r1 = run(rec.query, rec.passages, cfg, a, emb);
  cfg.workers = 4;
  const auto r2 = run(rec.query, rec.passages, cfg, b, emb);
  CHECK(r1.response == r2.response);
  auto t1 = r1.trace;
  auto t2 = r2.trace;
  t1.erase("config");
  t2.erase("config");
  CHECK(t1.dump() == t2.dump());
  CHECK(r1.trace_id == r2.trace_id);
}

TEST_CASE("trace files") {
  const auto rec = acurai::testing::record("7969");
  ReplayClient replay(cassette("corpus"));
  HashedNgramProvider emb;
  const auto r = run(rec.query, rec.passages, config_for(rec), replay, emb);
  const auto dir = std::filesystem::temp_directory_path() / "acurai_trace_test";
  const auto path = write_trace(r, dir.string());
  CHECK(std::filesystem::path(path).filename() == r.trace_id + ".json");
  CHECK(acurai::testing::read_json(path) == r.trace);
  std::filesystem::remove_all(dir);
}
