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

#include "acurai/collision.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "acurai/error.hpp"
#include "acurai/resources.hpp"
#include "acurai/text.hpp"

namespace acurai {

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw Error(ErrorKind::invalid_input, "embedding dimension mismatch: " +
                                              std::to_string(a.dimension()) + " vs " +
                                              std::to_string(b.dimension()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::invalid_input, "zero embedding vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Alias table

std::string AliasTable::key(std::string_view term) const {
  const std::string t = text::collapse_whitespace(term);
  bool letters = false;
  for (const char c : t) letters |= std::isalpha(static_cast<unsigned char>(c)) != 0;
  if (letters && t.size() >= 2 && text::is_all_upper(t)) return t;
  return text::ascii_lower(t);
}

int AliasTable::find(int x) const {
  while (parent_[static_cast<std::size_t>(x)] != x) {
    parent_[static_cast<std::size_t>(x)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
    x = parent_[static_cast<std::size_t>(x)];
  }
  return x;
}

void AliasTable::add(const std::string& a, const std::string& b) {
  auto id_of = [&](const std::string& t) {
    const std::string k = key(t);
    const auto it = ids_.find(k);
    if (it != ids_.end()) return it->second;
    const int id = static_cast<int>(parent_.size());
    parent_.push_back(id);
    ids_.emplace(k, id);
    return id;
  };
  const int x = find(id_of(a));
  const int y = find(id_of(b));
  if (x != y) parent_[static_cast<std::size_t>(std::max(x, y))] = std::min(x, y);
}

AliasTable AliasTable::parse(std::string_view tsv) {
  AliasTable t;
  std::istringstream in{std::string(tsv)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() < 2) continue;
    t.add(text::trim(cols[0]), text::trim(cols[1]));
  }
  return t;
}

const AliasTable& AliasTable::defaults() {
  static const AliasTable t = parse(resources::aliases());
  return t;
}

int AliasTable::group(std::string_view term) const {
  const auto it = ids_.find(key(term));
  return it == ids_.end() ? -1 : find(it->second);
}

bool AliasTable::same(std::string_view a, std::string_view b) const {
  const int x = group(a);
  return x >= 0 && x == group(b);
}

std::vector<std::pair<std::string, int>> AliasTable::terms() const {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& [k, id] : ids_) out.emplace_back(k, find(id));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.first.size() > b.first.size();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Coreference

namespace {

std::string without_determiner(const nlp::NounPhrase& np) {
  std::string t = np.text;
  if (!np.determiner.empty() && t.rfind(np.determiner, 0) == 0) t = t.substr(np.determiner.size());
  return text::trim(t);
}

std::set<std::string> modifier_lemmas(const nlp::NounPhrase& np) {
  std::set<std::string> out;
  for (const auto& m : np.modifiers) out.insert(nlp::lemmatize(m, nlp::Pos::noun));
  return out;
}

bool subset(const std::set<std::string>& a, const std::set<std::string>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

bool are_coreferent(const nlp::NounPhrase& a, const nlp::NounPhrase& b, const AliasTable& aliases) {
  const std::string ta = without_determiner(a);
  const std::string tb = without_determiner(b);
  if (nlp::normalize_np(ta) == nlp::normalize_np(tb)) return true;
  if (aliases.same(ta, tb)) return true;
  if (a.head.empty() || a.head != b.head) return false;
  if (a.container != b.container) return false;
  if (a.container && a.complement_head != b.complement_head) return false;
  const auto ma = modifier_lemmas(a);
  const auto mb = modifier_lemmas(b);
  return subset(ma, mb) || subset(mb, ma);
}

const char* to_string(CollisionReason r) noexcept {
  switch (r) {
    case CollisionReason::embedding_similarity: return "embedding-similarity";
    case CollisionReason::id_like_span: return "id-like-span";
    case CollisionReason::entity_common_noun_overlap: return "entity-common-noun-overlap";
  }
  return "embedding-similarity";
}

// ---------------------------------------------------------------------------
// Detection

namespace {

bool np_less(const nlp::NounPhrase& a, const nlp::NounPhrase& b) {
  if (a.span != b.span) return a.span < b.span;
  return a.text < b.text;
}

}  // namespace

std::vector<CollisionPair> detect_collisions(const std::vector<nlp::NounPhrase>& nps,
                                             EmbeddingProvider& provider,
                                             const CollisionConfig& config,
                                             const AliasTable& aliases, EmbeddingCache* cache) {
  // Deduplicate by normalized text, keeping the earliest occurrence.
  std::map<std::string, nlp::NounPhrase> uniq;
  for (const auto& np : nps) {
    const std::string k = nlp::normalize_np(without_determiner(np));
    if (k.empty()) continue;
    const auto it = uniq.find(k);
    if (it == uniq.end() || np_less(np, it->second)) uniq[k] = np;
  }
  std::vector<nlp::NounPhrase> items;
  for (auto& [k, np] : uniq) items.push_back(np);
  std::sort(items.begin(), items.end(), np_less);
  if (items.size() < 2) return {};

  std::vector<std::string> texts;
  for (const auto& np : items) texts.push_back(without_determiner(np));
  const auto vecs = embed_batch(provider, texts, cache);

  std::vector<CollisionPair> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const double sim = cosine_similarity(vecs[i], vecs[j]);
      if (sim < config.threshold) continue;
      if (are_coreferent(items[i], items[j], aliases)) continue;
      out.push_back(CollisionPair{items[i], items[j], sim, CollisionReason::embedding_similarity});
    }
  }
  std::sort(out.begin(), out.end(), [](const CollisionPair& a, const CollisionPair& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (np_less(a.left, b.left) || np_less(b.left, a.left)) return np_less(a.left, b.left);
    return np_less(a.right, b.right);
  });
  return out;
}

std::vector<CollisionPair> entity_common_noun_overlaps(const std::vector<nlp::NounPhrase>& nps) {
  const auto& wc = nlp::WordClasses::instance();
  std::vector<CollisionPair> out;
  for (const auto& e : nps) {
    if (e.container) continue;
    const auto ew = text::split(text::collapse_whitespace(e.text), ' ');
    if (ew.size() < 2 || !wc.in("corporate-suffix", text::ascii_lower(ew.back()))) continue;
    std::set<std::string> name;
    for (std::size_t k = 0; k + 1 < ew.size(); ++k) {
      if (text::starts_with_upper(ew[k])) name.insert(text::ascii_lower(ew[k]));
    }
    for (const auto& c : nps) {
      if (c.proper || c.container || &c == &e) continue;
      bool shared = false;
      for (const auto& w : text::split(text::collapse_whitespace(c.text), ' ')) {
        shared |= !text::starts_with_upper(w) && name.count(text::ascii_lower(w)) != 0;
      }
      if (shared) {
        out.push_back(CollisionPair{e, c, 0.0, CollisionReason::entity_common_noun_overlap});
      }
    }
  }
  return out;
}

}  // namespace acurai
