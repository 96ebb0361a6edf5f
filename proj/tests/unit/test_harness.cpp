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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "acurai/error.hpp"
#include "acurai/harness.hpp"
#include "support.hpp"

using namespace acurai;

namespace {

// Wilson bounds are the roots in p0 of (p - p0)^2 = z^2 p0 (1 - p0) / n.
// Found by bisection, independently of the closed form.
std::pair<double, double> wilson_oracle(long long x, long long n, double z) {
  const double p = static_cast<double>(x) / static_cast<double>(n);
  auto f = [&](double p0) { return (p - p0) * (p - p0) - z * z * p0 * (1 - p0) / static_cast<double>(n); };
  auto bisect = [&](double lo, double hi) {
    // f(lo) and f(hi) have opposite signs (or one is a root).
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if ((f(lo) <= 0) == (f(mid) <= 0)) lo = mid;
      else hi = mid;
    }
    return 0.5 * (lo + hi);
  };
  const double low = x == 0 ? 0.0 : bisect(0.0, p);
  const double high = x == n ? 1.0 : bisect(1.0, p);
  return {low, high};
}

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream(path) << content;
  return path;
}

std::shared_ptr<Cassette> corpus_cassette() {
  return Cassette::load(acurai::testing::fixture("cassettes/corpus.json"));
}

}  // namespace

TEST_CASE("wilson interval examples") {
  const auto [lo, hi] = wilson_interval(37, 37);
  CHECK(lo == doctest::Approx(0.9059).epsilon(1e-4));
  CHECK(hi == 1.0);
  CHECK(format_interval(lo, hi) == "[0.91, 1]");

  const auto [lo0, hi0] = wilson_interval(0, 37);
  CHECK(lo0 == 0.0);
  CHECK(hi0 == doctest::Approx(1.0 - lo).epsilon(1e-12));

  const auto [l18, h18] = wilson_interval(18, 36);
  CHECK(0.5 - l18 == doctest::Approx(h18 - 0.5));

  CHECK_THROWS_AS(wilson_interval(5, 4), Error);
  CHECK_THROWS_AS(wilson_interval(0, 0), Error);
  CHECK_THROWS_AS(wilson_interval(1, 2, 0.0), Error);
}

TEST_CASE("wilson interval against root finding") {
  std::mt19937 rng(7);
  for (int i = 0; i < 300; ++i) {
    const long long n = std::uniform_int_distribution<long long>(1, 500)(rng);
    const long long x = std::uniform_int_distribution<long long>(0, n)(rng);
    const double z = std::uniform_real_distribution<double>(0.5, 3.5)(rng);
    const auto got = wilson_interval(x, n, z);
    const auto want = wilson_oracle(x, n, z);
    CHECK(got.first == doctest::Approx(want.first).epsilon(1e-9));
    CHECK(got.second == doctest::Approx(want.second).epsilon(1e-9));
  }
}

TEST_CASE("interval formatting") {
  CHECK(format_interval(0.9059, 1.0) == "[0.91, 1]");
  CHECK(format_interval(0.0, 0.0941) == "[0, 0.09]");
  CHECK(format_interval(0.25, 0.5) == "[0.25, 0.5]");
  CHECK(format_interval(0.12345, 0.6789, 3) == "[0.123, 0.679]");
}

TEST_CASE("loading the four RAGTruth records") {
  const auto r = load_dataset(acurai::testing::fixture("records4.jsonl"));
  REQUIRE(r.records.size() == 4);
  CHECK(r.errors.empty());
  CHECK(r.records[0].response_id == "7969");
  CHECK(r.records[3].response_id == "9692");
  CHECK(r.records[0].dataset == DatasetLabel::gpt4_subtle);
  CHECK(r.records[3].dataset == DatasetLabel::gpt35_evident);
  for (const auto& rec : r.records) CHECK_FALSE(rec.passages.empty());
}

TEST_CASE("load errors") {
  const auto empty = temp_file("acurai_empty.jsonl", "");
  try {
    load_dataset(empty);
    FAIL("expected empty dataset");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::empty_dataset);
  }

  const auto mixed = temp_file(
      "acurai_mixed.jsonl",
      R"({"response_id": "a", "query": "q", "passages": ["p"], "model": "m", "dataset": "other"})"
      "\n"
      R"({"response_id": "b", "query": "q", "model": "m", "dataset": "other"})"
      "\n"
      "not json\n"
      R"({"response_id": "c", "query": "q", "passages": ["p"], "model": "m", "dataset": "gpt4-subtle"})"
      "\n");
  const auto r = load_dataset(mixed);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[1].response_id == "c");
  REQUIRE(r.errors.size() == 2);
  CHECK(r.errors[0].line == 2);
  CHECK(r.errors[0].message.find("passages") != std::string::npos);
  CHECK(r.errors[1].line == 3);

  try {
    load_dataset("/nonexistent/acurai.jsonl");
    FAIL("expected io");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
  }
  std::filesystem::remove(empty);
  std::filesystem::remove(mixed);
}

TEST_CASE("evaluation over the four RAGTruth records") {
  const auto recs = load_dataset(acurai::testing::fixture("records4.jsonl")).records;
  ReplayClient replay(corpus_cassette());
  HashedNgramProvider emb;
  const auto s = evaluate(recs, {}, replay, emb);
  CHECK(s.n == 4);
  CHECK(s.successes == 4);
  CHECK(s.all_faithful());
  CHECK(s.accuracy == 1.0);
  const auto w = wilson_interval(4, 4);
  CHECK(s.wilson_low == w.first);
  CHECK(s.wilson_high == w.second);
  CHECK(s.temperature_defaulted);
  for (const auto& v : s.verdicts) {
    CHECK(v.verdict == "faithful");
    CHECK(check_response(v.response, recs[&v - &s.verdicts[0]].passages).verdict == Verdict::faithful);
  }
  const auto csv = to_csv(s);
  CHECK(csv.rfind("response_id,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(to_json(s)["interval"] == "[0.51, 1]");
}

TEST_CASE("per-record errors are failures") {
  auto recs = load_dataset(acurai::testing::fixture("records4.jsonl")).records;
  recs[1].query = "A query nobody recorded?";
  ReplayClient replay(corpus_cassette());
  HashedNgramProvider emb;
  const auto s = evaluate(recs, {}, replay, emb);
  CHECK(s.n == 4);
  CHECK(s.successes == 3);
  CHECK(s.verdicts[1].verdict == "error");
  CHECK(s.verdicts[1].reason.find("no recorded response") != std::string::npos);
  CHECK_FALSE(s.all_faithful());
}

TEST_CASE("evaluation is order independent and worker independent") {
  const auto recs = load_dataset(acurai::testing::fixture("corpus.jsonl")).records;
  HashedNgramProvider emb;
  ReplayClient a(corpus_cassette());
  const auto base = evaluate(recs, {}, a, emb);

  auto shuffled = recs;
  std::mt19937 rng(11);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  ReplayClient b(corpus_cassette());
  EvalOptions opts;
  opts.workers = 3;
  const auto other = evaluate(shuffled, opts, b, emb);
  CHECK(other.n == base.n);
  CHECK(other.successes == base.successes);
  CHECK(other.wilson_low == base.wilson_low);
  for (const auto& v : other.verdicts) {
    const auto it = std::find_if(base.verdicts.begin(), base.verdicts.end(),
                                 [&](const RecordVerdict& w) { return w.response_id == v.response_id; });
    REQUIRE(it != base.verdicts.end());
    CHECK(it->verdict == v.verdict);
    CHECK(it->response == v.response);
  }
}

TEST_CASE("ragtruth conversion") {
  const auto info = temp_file(
      "acurai_source_info.jsonl",
      R"({"source_id": 1, "task_type": "QA", "source_info": {"question": "benefits of ice for neck", "passages": "passage 1:Ice helps.\n\npassage 2:Cold helps too."}})"
      "\n"
      R"({"source_id": 2, "task_type": "Summary", "source_info": "ignored"})"
      "\n");
  const auto resp = temp_file(
      "acurai_response.jsonl",
      R"({"id": 7969, "source_id": 1, "model": "gpt-4-0613", "temperature": 0.7, "response": "x", "labels": [{"label_type": "Subtle Conflict"}]})"
      "\n"
      R"({"id": 8000, "source_id": 1, "model": "llama-2-7b-chat", "response": "y", "labels": []})"
      "\n"
      R"({"id": 8001, "source_id": 2, "model": "gpt-4-0613", "response": "z", "labels": []})"
      "\n");
  const auto all = convert_ragtruth(info, resp);
  REQUIRE(all.size() == 2);
  CHECK(all[0].response_id == "7969");
  CHECK(all[0].passages == std::vector<std::string>{"Ice helps.", "Cold helps too."});
  CHECK(all[0].dataset == DatasetLabel::gpt4_subtle);
  CHECK(all[0].temperature == 0.7);
  CHECK(all[1].dataset == DatasetLabel::other);
  CHECK(convert_ragtruth(info, resp, true).size() == 1);

  const auto out = (std::filesystem::temp_directory_path() / "acurai_converted.jsonl").string();
  write_jsonl(all, out);
  const auto back = load_dataset(out);
  REQUIRE(back.records.size() == 2);
  CHECK(to_json(back.records[0]) == to_json(all[0]));
  for (const auto& p : {info, resp, out}) std::filesystem::remove(p);
}
