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

#include <optional>
#include <string>
#include <vector>

#include "acurai/collision.hpp"
#include "acurai/nlp.hpp"

namespace acurai {

struct AtomicQuery {
  std::string text;
  std::vector<nlp::NounPhrase> focal_nps;  // one chosen member per split slot
  std::string parent_query;
  int index = 0;
  bool fallback = false;  // template form was used because a rewrite failed
  bool capped = false;    // some collisions were left unsplit to respect the cap
};

struct SplitOptions {
  std::size_t cap = 16;
};

/// Noun phrases of a query as seen by collision detection: base phrases with
/// coordinated modifiers distributed over their heads.
std::vector<nlp::NounPhrase> query_noun_phrases(const std::string& query);

std::vector<CollisionPair> query_collisions(const std::string& query, EmbeddingProvider& provider,
                                            const CollisionConfig& config = {},
                                            EmbeddingCache* cache = nullptr);

/// Cartesian product of collision members, in slot-discovery order. Pairs that
/// share one coordination ("calcium, magnesium and barium") form a single slot.
std::vector<AtomicQuery> split_query(const std::string& query, const std::vector<CollisionPair>& pairs,
                                     const SplitOptions& options = {});

/// Replaces the coordination holding both members of `pair` with `member`.
/// Throws slot-not-found when no such coordination exists.
std::string rewrite_with_member(const std::string& query, const CollisionPair& pair,
                                const nlp::NounPhrase& member);

/// The entity an atomic query is about: the focal phrase used as an "of"
/// complement, else the last focal phrase. Empty when there are no focal phrases.
std::optional<nlp::NounPhrase> query_entity(const AtomicQuery& q);

}  // namespace acurai
