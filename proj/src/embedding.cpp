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

#include <cmath>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "acurai/collision.hpp"
#include "acurai/error.hpp"
#include "acurai/resources.hpp"
#include "acurai/text.hpp"
#include "internal.hpp"

namespace acurai {

namespace {

constexpr double kClassWeight = 0.9;
constexpr double kNgramWeight = 0.436;  // sqrt(1 - 0.9^2)
constexpr double kModifierWeight = 0.5;

// splitmix64 finalizer; FNV-1a alone leaves the high bits poorly mixed for short keys.
std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (const double x : v) n += x * x;
  if (n == 0.0) return;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
}

std::vector<double> signed_hash_vector(std::string_view seed_prefix, std::size_t dim) {
  std::vector<double> v(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const auto h = mix(text::fnv1a64(std::string(seed_prefix) + "#" + std::to_string(d)));
    v[d] = (h >> 33) & 1U ? -1.0 : 1.0;
  }
  normalize(v);
  return v;
}

}  // namespace

HashedNgramProvider::HashedNgramProvider() {
  std::istringstream in{std::string(resources::concepts())};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() < 2) continue;
    concept_.emplace(text::ascii_lower(cols[0]), text::trim(cols[1]));
  }
}

std::vector<double> HashedNgramProvider::word_vector(const std::string& lemma) const {
  std::vector<double> v(kDimension, 0.0);
  const std::string w = "^" + lemma + "$";
  for (std::size_t i = 0; i + 3 <= w.size(); ++i) {
    const auto h = mix(text::fnv1a64(std::string_view(w).substr(i, 3)));
    v[h % kDimension] += (h >> 32) & 1U ? -1.0 : 1.0;
  }
  normalize(v);
  bool zero = true;
  for (const double x : v) zero &= x == 0.0;
  if (zero) v[text::fnv1a64(w) % kDimension] = 1.0;
  const auto it = concept_.find(lemma);
  if (it != concept_.end()) {
    const auto cls = signed_hash_vector("concept:" + it->second, kDimension);
    for (std::size_t d = 0; d < kDimension; ++d) v[d] = kClassWeight * cls[d] + kNgramWeight * v[d];
    normalize(v);
  }
  return v;
}

std::vector<EmbeddingVector> HashedNgramProvider::embed(const std::vector<std::string>& texts) {
  ++calls_;
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const auto tagged = nlp::tag_text(t);
    std::vector<std::pair<std::string, nlp::Pos>> words;
    for (const auto& tt : tagged) {
      if (tt.token.kind != nlp::TokenKind::word && tt.token.kind != nlp::TokenKind::number &&
          tt.token.kind != nlp::TokenKind::unit) {
        continue;
      }
      if (tt.pos == nlp::Pos::determiner) continue;
      if (tt.pos == nlp::Pos::pronoun && nlp::is_possessive_pronoun(text::ascii_lower(tt.token.text))) {
        continue;
      }
      words.emplace_back(tt.token.text, tt.pos);
    }
    std::vector<double> v(kDimension, 0.0);
    if (words.empty()) {
      v = word_vector(text::ascii_lower(text::trim(t)));
    } else {
      std::size_t head = words.size() - 1;
      for (std::size_t k = words.size(); k-- > 0;) {
        if (words[k].second == nlp::Pos::noun || words[k].second == nlp::Pos::proper_noun) {
          head = k;
          break;
        }
      }
      for (std::size_t k = 0; k < words.size(); ++k) {
        const std::string lemma = nlp::lemmatize(words[k].first, nlp::Pos::noun);
        const auto wv = word_vector(lemma);
        const double weight = k == head ? 1.0 : kModifierWeight;
        for (std::size_t d = 0; d < kDimension; ++d) v[d] += weight * wv[d];
      }
      normalize(v);
    }
    out.push_back(EmbeddingVector{std::move(v), id()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// HTTP provider

namespace {

detail::Limiter& embed_limiter() {
  static detail::Limiter l(4);
  return l;
}

}  // namespace

void HttpEmbeddingProvider::set_max_in_flight(std::ptrdiff_t n) { embed_limiter().set_limit(n); }

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig config) : config_(std::move(config)) {
  if (config_.api_key.empty()) {
    if (const char* k = std::getenv("ACURAI_EMBED_API_KEY")) config_.api_key = k;
  }
  if (config_.url.empty()) throw Error(ErrorKind::config, "embedding endpoint url is empty");
  if (config_.batch_size == 0) config_.batch_size = 1;
  if (config_.max_attempts < 1) config_.max_attempts = 1;
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  for (std::size_t i = 0; i < texts.size(); i += config_.batch_size) {
    const std::vector<std::string> batch(
        texts.begin() + static_cast<std::ptrdiff_t>(i),
        texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), i + config_.batch_size)));
    auto part = embed_one_batch(batch);
    for (auto& v : part) out.push_back(std::move(v));
  }
  return out;
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed_one_batch(const std::vector<std::string>& batch) {
  const auto url = detail::split_url(config_.url);
  const nlohmann::json body = {{"input", batch}, {"model", config_.model}};
  const std::string payload = body.dump();
  std::string last_error;
  ErrorKind last_kind = ErrorKind::network;
  int attempt = 0;
  for (attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    httplib::Result res;
    {
      detail::LimiterGuard guard(embed_limiter());
      httplib::Client cli(url.origin);
      cli.set_connection_timeout(config_.timeout);
      cli.set_read_timeout(config_.timeout);
      httplib::Headers headers;
      if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
      res = cli.Post(url.path, headers, payload, "application/json");
    }
    if (!res) {
      last_kind = res.error() == httplib::Error::ConnectionTimeout || res.error() == httplib::Error::Read
                      ? ErrorKind::timeout
                      : ErrorKind::network;
      last_error = "embedding request failed: " + httplib::to_string(res.error());
    } else if (res->status == 401 || res->status == 403) {
      throw ProviderError(ErrorKind::auth, "embedding provider rejected credentials (HTTP " +
                                               std::to_string(res->status) + ")",
                          batch, attempt);
    } else if (res->status == 429 || res->status >= 500) {
      last_kind = res->status == 429 ? ErrorKind::rate_limited : ErrorKind::provider;
      last_error = "embedding provider returned HTTP " + std::to_string(res->status);
    } else if (res->status != 200) {
      throw ProviderError(ErrorKind::provider,
                          "embedding provider returned HTTP " + std::to_string(res->status), batch,
                          attempt);
    } else {
      std::vector<EmbeddingVector> out;
      try {
        const auto j = nlohmann::json::parse(res->body);
        const auto& data = j.at("data");
        if (!data.is_array() || data.size() != batch.size()) {
          throw std::runtime_error("expected " + std::to_string(batch.size()) + " embeddings");
        }
        for (const auto& item : data) {
          EmbeddingVector v{item.at("embedding").get<std::vector<double>>(), id()};
          if (v.values.empty()) throw std::runtime_error("empty embedding");
          out.push_back(std::move(v));
        }
      } catch (const std::exception& e) {
        throw ProviderError(ErrorKind::malformed_response,
                            std::string("malformed embedding response: ") + e.what(), batch, attempt);
      }
      std::lock_guard<std::mutex> lk(mu_);
      if (dimension_ == 0) dimension_ = out.front().values.size();
      for (const auto& v : out) {
        if (v.values.size() != dimension_) {
          throw ProviderError(ErrorKind::malformed_response, "inconsistent embedding dimension",
                              batch, attempt);
        }
      }
      return out;
    }
    if (attempt < config_.max_attempts) {
      std::this_thread::sleep_for(config_.backoff * (1 << (attempt - 1)));
    }
  }
  throw ProviderError(last_kind, last_error, batch, config_.max_attempts);
}

// ---------------------------------------------------------------------------
// Cache

bool EmbeddingCache::lookup(const std::string& provider_id, const std::string& text,
                            EmbeddingVector& out) const {
  std::lock_guard<std::mutex> lk(mu_);
  const auto it = entries_.find({provider_id, text});
  if (it == entries_.end()) return false;
  out = it->second;
  return true;
}

void EmbeddingCache::store(const std::string& provider_id, const std::string& text,
                           const EmbeddingVector& v) {
  std::lock_guard<std::mutex> lk(mu_);
  entries_.emplace(std::make_pair(provider_id, text), v);
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard<std::mutex> lk(mu_);
  return entries_.size();
}

std::vector<EmbeddingVector> embed_batch(EmbeddingProvider& provider,
                                         const std::vector<std::string>& texts,
                                         EmbeddingCache* cache) {
  if (texts.empty()) throw Error(ErrorKind::invalid_input, "embed_batch requires at least one text");
  const std::string pid = provider.id();
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<bool> have(texts.size(), false);
  std::vector<std::string> misses;
  std::map<std::string, std::size_t> miss_index;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (cache != nullptr && cache->lookup(pid, texts[i], out[i])) {
      have[i] = true;
      continue;
    }
    if (miss_index.emplace(texts[i], misses.size()).second) misses.push_back(texts[i]);
  }
  if (!misses.empty()) {
    const auto fetched = provider.embed(misses);
    if (fetched.size() != misses.size()) {
      throw ProviderError(ErrorKind::malformed_response, "provider returned wrong number of vectors",
                          misses, 1);
    }
    for (std::size_t m = 0; m < misses.size(); ++m) {
      if (cache != nullptr) cache->store(pid, misses[m], fetched[m]);
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (!have[i]) out[i] = fetched[miss_index.at(texts[i])];
    }
  }
  return out;
}

}  // namespace acurai
