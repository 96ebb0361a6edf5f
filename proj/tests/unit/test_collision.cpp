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

#include <cmath>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "acurai/collision.hpp"
#include "acurai/error.hpp"
#include "acurai/text.hpp"

using namespace acurai;

namespace {

EmbeddingVector vec(std::vector<double> v) { return EmbeddingVector{std::move(v), "test"}; }

nlp::NounPhrase np(const std::string& s) {
  auto nps = nlp::extract_noun_phrases(s);
  REQUIRE(!nps.empty());
  return nps.front();
}

// Plain textbook cosine, used as the oracle.
double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string fingerprint(const EmbeddingVector& v) {
  std::string s;
  char buf[32];
  for (double x : v.values) {
    std::snprintf(buf, sizeof buf, "%.6f,", x);
    s += buf;
  }
  return text::sha256_hex(s);
}

}  // namespace

TEST_CASE("cosine similarity") {
  CHECK(cosine_similarity(vec({0.3, -2, 5}), vec({0.3, -2, 5})) == doctest::Approx(1.0));
  CHECK(cosine_similarity(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
  CHECK(cosine_similarity(vec({1, 0}), vec({1, 1})) == doctest::Approx(0.70710678).epsilon(1e-6));
  CHECK_THROWS_AS(cosine_similarity(vec({1, 0}), vec({1, 0, 0})), Error);
  CHECK_THROWS_AS(cosine_similarity(vec({0, 0}), vec({1, 0})), Error);

  std::mt19937 rng(7);
  std::normal_distribution<double> d;
  for (int k = 0; k < 200; ++k) {
    std::vector<double> a(16), b(16);
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng);
    CHECK(cosine_similarity(vec(a), vec(b)) == doctest::Approx(oracle_cosine(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("offline provider is deterministic and unit length") {
  HashedNgramProvider p1, p2;
  const auto a = p1.embed({"calcium"});
  const auto b = p2.embed({"calcium"});
  REQUIRE(a.size() == 1);
  CHECK(a[0].dimension() == 64);
  CHECK(a[0].values == b[0].values);
  double n = 0;
  for (double x : a[0].values) n += x * x;
  CHECK(std::sqrt(n) == doctest::Approx(1.0));
  // Golden fingerprint of the "calcium" vector; changes whenever the hashing scheme changes.
  CHECK(fingerprint(a[0]) == "ce2d595c5339713a3a6973b600680002abf73a7dcc6156f40302449d076439b3");
}

TEST_CASE("coreference") {
  CHECK(are_coreferent(np("car"), np("automobile")));
  CHECK(are_coreferent(np("calcium"), np("calcium")));
  CHECK_FALSE(are_coreferent(np("calcium"), np("magnesium")));
}

TEST_CASE("collision detection") {
  HashedNgramProvider p;
  const auto pairs =
      detect_collisions({np("chemical properties"), np("physical properties"), np("calcium"), np("magnesium")}, p);
  REQUIRE(pairs.size() == 2);
  std::set<std::pair<std::string, std::string>> got;
  for (const auto& c : pairs) got.insert({c.left.text, c.right.text});
  CHECK(got.count({"chemical properties", "physical properties"}));
  CHECK(got.count({"calcium", "magnesium"}));
  for (const auto& c : pairs) CHECK(c.similarity >= 0.75);

  CHECK(detect_collisions({np("calcium")}, p).empty());
  CHECK(detect_collisions({np("car"), np("automobile")}, p).empty());
}

TEST_CASE("entity and common noun overlap") {
  const auto nps = nlp::extract_noun_phrases("Cruise LLC announced cruise control improvements");
  const auto pairs = entity_common_noun_overlaps(nps);
  REQUIRE(!pairs.empty());
  CHECK(pairs.front().reason == CollisionReason::entity_common_noun_overlap);
}

TEST_CASE("embedding cache") {
  HashedNgramProvider p;
  EmbeddingCache cache;
  const auto first = embed_batch(p, {"calcium"}, &cache);
  const auto calls = p.calls();
  const auto second = embed_batch(p, {"calcium"}, &cache);
  CHECK(p.calls() == calls);
  CHECK(first[0].values == second[0].values);

  const auto ab = embed_batch(p, {"alpha", "beta"}, &cache);
  CHECK(ab[0].values == p.embed({"alpha"})[0].values);
  CHECK(ab[1].values == p.embed({"beta"})[0].values);
  CHECK_THROWS_AS(embed_batch(p, {}, &cache), Error);
}

TEST_CASE("http embedding provider against a stub server") {
  httplib::Server srv;
  std::atomic<int> hits{0};
  srv.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    const auto body = nlohmann::json::parse(req.body);
    if (req.get_header_value("Authorization") == "Bearer bad") {
      res.status = 401;
      return;
    }
    nlohmann::json data = nlohmann::json::array();
    double k = 1;
    for (const auto& s : body["input"]) {
      data.push_back({{"embedding", {k, static_cast<double>(s.get<std::string>().size()), 0.5}}});
      k += 1;
    }
    res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  std::thread t([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  HttpEmbeddingConfig cfg;
  cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/embeddings";
  cfg.model = "stub";
  cfg.batch_size = 2;
  cfg.api_key = "good";
  HttpEmbeddingProvider p(cfg);
  const auto v = p.embed({"a", "bb", "ccc"});
  REQUIRE(v.size() == 3);
  CHECK(v[1].values[1] == 2.0);
  CHECK(v[2].values[0] == 1.0);  // third text opens the second batch
  CHECK(hits == 2);

  cfg.api_key = "bad";
  HttpEmbeddingProvider denied(cfg);
  try {
    denied.embed({"x"});
    FAIL("expected an auth error");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ErrorKind::auth);
    CHECK(e.failed_batch() == std::vector<std::string>{"x"});
  }
  srv.stop();
  t.join();
}
