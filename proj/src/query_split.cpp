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

#include "acurai/query_split.hpp"

#include <algorithm>
#include <map>

#include "acurai/error.hpp"
#include "acurai/text.hpp"

namespace acurai {

namespace {

std::string bare(const nlp::NounPhrase& np) {
  std::string t = np.text;
  if (!np.determiner.empty() && t.rfind(np.determiner, 0) == 0) t = t.substr(np.determiner.size());
  return nlp::normalize_np(t);
}

std::string conj_key(const std::string& conjunct) {
  // Conjunct texts may carry a determiner ("the cat"); compare without it.
  const auto nps = nlp::extract_noun_phrases(conjunct);
  for (const auto& np : nps) {
    if (!np.container) return bare(np);
  }
  return nlp::normalize_np(conjunct);
}

// Index of the coordination whose conjuncts include every text in `members`.
std::optional<std::size_t> coordination_for(const std::vector<nlp::Coordination>& coords,
                                            const std::vector<std::string>& members) {
  for (std::size_t c = 0; c < coords.size(); ++c) {
    std::vector<std::string> keys;
    for (const auto& cj : coords[c].conjuncts) keys.push_back(conj_key(cj));
    bool all = true;
    for (const auto& m : members) all &= std::find(keys.begin(), keys.end(), m) != keys.end();
    if (all) return c;
  }
  return std::nullopt;
}

std::string tidy(std::string s) {
  s = text::collapse_whitespace(s);
  for (const char* p : {" ?", " .", " ,", " !", " ;", " :"}) s = text::replace_all(s, p, p + 1);
  return s;
}

struct Slot {
  std::vector<nlp::NounPhrase> members;
  std::size_t order = 0;  // byte offset used for discovery order
  double max_sim = 0.0;
};

}  // namespace

std::vector<nlp::NounPhrase> query_noun_phrases(const std::string& query) {
  std::vector<nlp::NounPhrase> out;
  for (const auto& np : nlp::extract_noun_phrases(query)) {
    if (np.container) continue;
    for (auto& e : nlp::expand_coordination(np)) out.push_back(std::move(e));
  }
  return out;
}

std::vector<CollisionPair> query_collisions(const std::string& query, EmbeddingProvider& provider,
                                            const CollisionConfig& config, EmbeddingCache* cache) {
  const auto nps = query_noun_phrases(query);
  if (nps.size() < 2) return {};
  return detect_collisions(nps, provider, config, AliasTable::defaults(), cache);
}

std::string rewrite_with_member(const std::string& query, const CollisionPair& pair,
                                const nlp::NounPhrase& member) {
  const auto coords = nlp::find_coordinations(query);
  const auto idx = coordination_for(coords, {bare(pair.left), bare(pair.right)});
  if (!idx) {
    throw Error(ErrorKind::slot_not_found, "no coordination holds both \"" + pair.left.text +
                                               "\" and \"" + pair.right.text + "\"");
  }
  const auto& c = coords[*idx];
  std::string replacement = member.text;
  if (!member.determiner.empty() && member.text.rfind(member.determiner, 0) == 0 &&
      c.kind == nlp::Coordination::Kind::modifier) {
    replacement = text::trim(member.text.substr(member.determiner.size()));
  }
  std::string out = query.substr(0, c.span.start) + replacement + query.substr(c.span.end);
  return tidy(out);
}

std::vector<AtomicQuery> split_query(const std::string& query, const std::vector<CollisionPair>& pairs,
                                     const SplitOptions& options) {
  if (pairs.empty()) {
    AtomicQuery q;
    q.text = query;
    q.parent_query = query;
    return {q};
  }
  const auto coords = nlp::find_coordinations(query);
  // Group pairs into slots by the coordination holding them.
  std::map<std::size_t, Slot> by_coord;
  std::vector<Slot> loose;
  auto add_member = [](Slot& s, const nlp::NounPhrase& m) {
    for (const auto& x : s.members) {
      if (bare(x) == bare(m)) return;
    }
    s.members.push_back(m);
  };
  for (const auto& p : pairs) {
    const auto idx = coordination_for(coords, {bare(p.left), bare(p.right)});
    if (idx) {
      Slot& s = by_coord[*idx];
      s.order = coords[*idx].span.start;
      add_member(s, p.left);
      add_member(s, p.right);
      s.max_sim = std::max(s.max_sim, p.similarity);
    } else {
      Slot s;
      s.order = std::min(p.left.span.start, p.right.span.start);
      add_member(s, p.left);
      add_member(s, p.right);
      s.max_sim = p.similarity;
      loose.push_back(std::move(s));
    }
  }
  std::vector<Slot> slots;
  for (auto& [idx, s] : by_coord) {
    // Members follow conjunct order within the coordination.
    const auto& cj = coords[idx].conjuncts;
    std::stable_sort(s.members.begin(), s.members.end(), [&](const auto& a, const auto& b) {
      auto pos = [&](const nlp::NounPhrase& m) {
        for (std::size_t k = 0; k < cj.size(); ++k) {
          if (conj_key(cj[k]) == bare(m)) return k;
        }
        return cj.size();
      };
      return pos(a) < pos(b);
    });
    slots.push_back(std::move(s));
  }
  for (auto& s : loose) slots.push_back(std::move(s));
  std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.order < b.order; });

  // Respect the cap: split the most similar slots first.
  std::vector<std::size_t> by_sim(slots.size());
  for (std::size_t k = 0; k < slots.size(); ++k) by_sim[k] = k;
  std::stable_sort(by_sim.begin(), by_sim.end(),
                   [&](std::size_t a, std::size_t b) { return slots[a].max_sim > slots[b].max_sim; });
  std::vector<bool> split(slots.size(), false);
  std::size_t product = 1;
  bool capped = false;
  for (const auto k : by_sim) {
    if (product * slots[k].members.size() <= std::max<std::size_t>(options.cap, 1)) {
      product *= slots[k].members.size();
      split[k] = true;
    } else {
      capped = true;
    }
  }
  std::vector<const Slot*> active;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (split[k]) active.push_back(&slots[k]);
  }

  std::vector<AtomicQuery> out;
  std::vector<std::size_t> choice(active.size(), 0);
  for (std::size_t n = 0; n < product; ++n) {
    std::size_t rem = n;
    for (std::size_t k = active.size(); k-- > 0;) {
      choice[k] = rem % active[k]->members.size();
      rem /= active[k]->members.size();
    }
    AtomicQuery q;
    q.parent_query = query;
    q.index = static_cast<int>(n);
    q.capped = capped;
    std::string t = query;
    try {
      for (std::size_t k = 0; k < active.size(); ++k) {
        const auto& ms = active[k]->members;
        const CollisionPair slot_pair{ms[0], ms[1], active[k]->max_sim,
                                      CollisionReason::embedding_similarity};
        t = rewrite_with_member(t, slot_pair, ms[choice[k]]);
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::slot_not_found) throw;
      std::vector<std::string> names;
      for (std::size_t k = 0; k < active.size(); ++k) names.push_back(active[k]->members[choice[k]].text);
      t = "Tell me about " + text::join(names, " and ") + "?";
      q.fallback = true;
    }
    q.text = t;
    for (std::size_t k = 0; k < active.size(); ++k) q.focal_nps.push_back(active[k]->members[choice[k]]);
    out.push_back(std::move(q));
  }
  return out;
}

std::optional<nlp::NounPhrase> query_entity(const AtomicQuery& q) {
  if (q.focal_nps.empty()) return std::nullopt;
  const auto nps = nlp::extract_noun_phrases(q.text);
  for (const auto& f : q.focal_nps) {
    for (const auto& np : nps) {
      if (np.container && !np.complement_head.empty() && np.complement_head == f.head) return f;
    }
  }
  return q.focal_nps.back();
}

}  // namespace acurai
