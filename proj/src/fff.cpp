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

#include "acurai/fff.hpp"

#include <algorithm>
#include <atomic>
#include <nlohmann/json.hpp>
#include <set>
#include <thread>

#include "acurai/error.hpp"
#include "acurai/faithfulness.hpp"
#include "acurai/text.hpp"

namespace acurai {

using nlp::NounPhrase;
using nlp::Pos;
using nlp::TaggedToken;
using nlp::TokenKind;

std::size_t FactSet::statement_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sections) n += s.statements.size();
  return n;
}

bool ValidationResult::has(char rule) const noexcept {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.rule == rule; });
}

namespace {

std::string lower_at(const std::vector<TaggedToken>& tt, std::size_t i) {
  return text::ascii_lower(tt[i].token.text);
}

bool ends_with(const std::string& s, std::string_view suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

bool is_adverb(const TaggedToken& t) {
  if (t.pos != Pos::other || t.token.kind != TokenKind::word) return false;
  const auto& w = t.token.text;
  return !w.empty() && std::isalpha(static_cast<unsigned char>(w[0]));
}

bool is_nominal(Pos p) { return p == Pos::noun || p == Pos::proper_noun; }

bool is_participle(const std::string& w) {
  if (ends_with(w, "s")) return false;
  return nlp::lemmatize(w, Pos::verb) != w;
}

EmbeddingProvider& provider_of(const FffConfig& cfg) {
  static HashedNgramProvider fallback;
  return cfg.provider ? *cfg.provider : fallback;
}

struct ClauseInfo {
  std::vector<std::pair<std::size_t, std::size_t>> top;  // token ranges of top-level finite groups
  bool participial_adjunct = false;
  bool stacked = false;
};

// Verb groups are maximal runs of verbs, possibly with adverbs between them
// ("can also burn"). A group is non-finite after "to", when it starts with an
// -ing form, or when it is a participle right after a noun once the main verb
// has been seen ("the point shown in"). Groups introduced by a subordinator
// ("which is", "that is") are not top-level.
ClauseInfo analyze_clauses(const std::vector<TaggedToken>& tt) {
  const auto& wc = nlp::WordClasses::instance();
  ClauseInfo info;
  int paren = 0;
  bool pending_sub = false;
  const std::size_t n = tt.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string t = lower_at(tt, i);
    if (t == "(" || t == "[") {
      ++paren;
      continue;
    }
    if (t == ")" || t == "]") {
      paren = std::max(0, paren - 1);
      continue;
    }
    if (paren > 0) continue;
    if (wc.in("subordinator", t) && tt[i].pos != Pos::determiner && tt[i].pos != Pos::verb) {
      pending_sub = true;
      continue;
    }
    if (tt[i].pos != Pos::verb) continue;
    std::size_t j = i;
    std::size_t k = i + 1;
    while (k < n) {
      if (tt[k].pos == Pos::verb) {
        j = k++;
        continue;
      }
      std::size_t m = k;
      while (m < n && is_adverb(tt[m])) ++m;
      if (m > k && m < n && tt[m].pos == Pos::verb) {
        k = m;
        continue;
      }
      break;
    }
    const std::string prev = i > 0 ? lower_at(tt, i - 1) : std::string();
    bool finite = true;
    if (prev == "to") {
      finite = false;
    } else if (ends_with(t, "ing") && !nlp::is_auxiliary(t)) {
      finite = false;
      if (prev == ",") info.participial_adjunct = true;
    } else if (!info.top.empty() && i > 0 && is_nominal(tt[i - 1].pos) && is_participle(t)) {
      finite = false;
    }
    if (finite) {
      if (pending_sub) {
        pending_sub = false;
      } else {
        info.top.emplace_back(i, j);
      }
    }
    if (nlp::is_auxiliary(t) && !nlp::is_modal(t)) {
      for (std::size_t m = i + 1; m <= j; ++m) {
        const std::string w = lower_at(tt, m);
        if (tt[m].pos != Pos::verb || nlp::is_auxiliary(w)) continue;
        if (ends_with(w, "s") && !ends_with(w, "ss") && nlp::lemmatize(w, Pos::verb) != w) info.stacked = true;
      }
    }
    i = j;
  }
  return info;
}

std::string strip_determiner(const NounPhrase& np) {
  std::string t = text::collapse_whitespace(np.text);
  if (!np.determiner.empty() && t.size() > np.determiner.size() &&
      text::ascii_lower(t.substr(0, np.determiner.size())) == text::ascii_lower(np.determiner)) {
    t = text::trim(t.substr(np.determiner.size()));
  }
  return t;
}

bool refers_to(const NounPhrase& np, const NounPhrase& entity) {
  if (np.container) return false;
  return are_coreferent(np, entity);
}

std::vector<NounPhrase> statement_phrases(const std::string& s, const std::vector<TaggedToken>& tt) {
  std::vector<NounPhrase> out;
  for (const auto& np : nlp::chunk(s, tt)) {
    if (np.container) continue;
    if (np.conjuncts.empty()) {
      out.push_back(np);
    } else {
      for (auto& e : nlp::expand_coordination(np)) out.push_back(std::move(e));
    }
  }
  return out;
}

// Number and unit tokens of a text, for the numeric-fidelity check.
std::set<std::string> numeric_tokens(const std::string& s) {
  std::set<std::string> out;
  for (const auto& t : nlp::tokenize(s)) {
    if (t.kind == TokenKind::number || t.kind == TokenKind::symbol) out.insert(text::ascii_lower(t.text));
  }
  return out;
}


bool is_end_punct(char c) { return c == '.' || c == ',' || c == ';' || c == ':' || c == '!'; }

// Trimmed, whitespace-collapsed, capitalized and ending in a single period.
std::string finish(std::string s) {
  s = text::collapse_whitespace(text::trim(s));
  while (!s.empty() && (is_end_punct(s.back()) || s.back() == ' ')) s.pop_back();
  s = text::replace_all(s, " ,", ",");
  if (s.empty()) return s;
  return text::capitalize_first(s) + ".";
}

std::string without_end_punct(std::string s) {
  s = text::trim(s);
  while (!s.empty() && (is_end_punct(s.back()) || s.back() == ' ')) s.pop_back();
  return s;
}

std::string lower_first(std::string s) {
  if (s.size() >= 2 && std::isupper(static_cast<unsigned char>(s[0])) &&
      !std::isupper(static_cast<unsigned char>(s[1]))) {
    s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  }
  return s;
}

bool is_dash(const std::string& t) { return t == "--" || t == "—" || t == "–"; }

// A label such as "Calcium" in "Calcium: ..." or "Physical Properties" in
// "Physical Properties --...": only nominal words, at least one noun.
bool is_label(const std::vector<TaggedToken>& tt, std::size_t end) {
  if (end == 0 || end > 6) return false;
  bool noun = false;
  for (std::size_t i = 0; i < end; ++i) {
    const Pos p = tt[i].pos;
    if (is_nominal(p)) noun = true;
    else if (p != Pos::adjective && p != Pos::determiner && p != Pos::conjunction) return false;
  }
  return noun;
}

bool has_verb(const std::vector<TaggedToken>& tt) {
  return std::any_of(tt.begin(), tt.end(), [](const TaggedToken& t) { return t.pos == Pos::verb; });
}

// Title-case line without a verb ("Chemical and Physical Properties of Magnesium").
bool is_title(const std::vector<TaggedToken>& tt) {
  static const std::set<std::string> minor = {"of", "and", "the", "for", "in", "on", "a", "an", "to", "&", "or"};
  if (has_verb(tt)) return false;
  int caps = 0;
  for (const auto& t : tt) {
    if (t.token.kind == TokenKind::punctuation) continue;
    if (t.token.kind != TokenKind::word) return false;
    if (text::starts_with_upper(t.token.text)) ++caps;
    else if (!minor.count(text::ascii_lower(t.token.text))) return false;
  }
  return caps >= 2;
}

// "... with oxygen, or air" -> "... with oxygen" and "... with air".
std::vector<std::string> split_final_alternatives(const std::string& c) {
  const auto tt = nlp::tag_text(c);
  std::size_t last = tt.size();
  while (last > 0 && tt[last - 1].token.kind == TokenKind::punctuation) --last;
  std::size_t ci = tt.size();
  for (std::size_t i = last; i-- > 0;) {
    const std::string w = lower_at(tt, i);
    if (tt[i].pos == Pos::conjunction && (w == "or" || w == "and")) {
      ci = i;
      break;
    }
  }
  if (ci == tt.size() || ci == 0 || ci + 1 >= last) return {c};
  const auto nps = nlp::chunk(c, tt);
  const nlp::Span conj = tt[ci].token.span;
  for (const auto& np : nps) {
    if (np.span.contains(conj)) return {c};
  }
  const std::size_t before = lower_at(tt, ci - 1) == "," ? ci - 1 : ci;
  const NounPhrase* first = nullptr;
  const NounPhrase* second = nullptr;
  for (const auto& np : nps) {
    if (np.container) continue;
    if (before > 0 && np.span.end == tt[before - 1].token.span.end) first = &np;
    if (np.span.start == tt[ci + 1].token.span.start && np.span.end == tt[last - 1].token.span.end) second = &np;
  }
  if (!first || !second) return {c};
  std::size_t fi = 0;
  while (fi < tt.size() && tt[fi].token.span.start < first->span.start) ++fi;
  if (fi == 0 || tt[fi - 1].pos != Pos::preposition) return {c};
  const std::string prefix = c.substr(0, first->span.start);
  return {prefix + c.substr(first->span.start, first->span.size()),
          prefix + c.substr(second->span.start, second->span.size())};
}

// Splits a verb-initial fragment at ", VERB" and "and VERB".
std::vector<std::string> split_verb_phrases(const std::string& core, const std::vector<TaggedToken>& tt) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t k = 1; k < tt.size(); ++k) {
    const std::string w = lower_at(tt, k);
    if (w != "," && !(w == "and" && tt[k].pos == Pos::conjunction)) continue;
    std::size_t m = k + 1;
    while (m < tt.size() && (lower_at(tt, m) == "and" || lower_at(tt, m) == ",")) ++m;
    if (m >= tt.size() || tt[m].pos != Pos::verb || ends_with(lower_at(tt, m), "ing")) continue;
    out.push_back(core.substr(start, tt[k].token.span.start - start));
    start = tt[m].token.span.start;
    k = m;
  }
  out.push_back(core.substr(start));
  return out;
}

bool has_complement(const std::vector<TaggedToken>& tt) {
  for (std::size_t i = 1; i < tt.size(); ++i) {
    if (tt[i].token.kind == TokenKind::word) return true;
  }
  return false;
}

std::string article_for(const std::vector<TaggedToken>& tt) {
  if (tt.empty() || tt[0].pos == Pos::determiner) return "";
  // The head is the last nominal before any preposition.
  std::string head;
  for (const auto& t : tt) {
    if (t.pos == Pos::preposition) break;
    if (is_nominal(t.pos)) head = text::ascii_lower(t.token.text);
  }
  if (!head.empty() && ends_with(head, "s") && nlp::lemmatize(head, Pos::noun) != head) return "";
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(tt[0].token.text[0])));
  return std::string("aeiou").find(c) != std::string::npos ? "an " : "a ";
}

// Rule-based rewrites of one sentence body. `subject` is the entity text to
// use for subjectless fragments and pronoun subjects, if known.
std::vector<std::string> deterministic_candidates(const std::string& body, const std::optional<std::string>& subject) {
  const auto& wc = nlp::WordClasses::instance();
  const std::string core = without_end_punct(body);
  if (core.empty()) return {};
  const auto tt = nlp::tag_text(core);
  if (tt.empty()) return {};
  const std::string first = lower_at(tt, 0);
  std::vector<std::string> out;
  if (tt[0].pos == Pos::pronoun && wc.in("anaphoric", first)) {
    if (!subject) return {finish(core)};
    const std::string rest = core.substr(tt[0].token.span.end);
    const bool possessive = nlp::is_possessive_pronoun(first);
    out.push_back(*subject + (possessive ? "'s" : "") + rest);
  } else if (tt[0].pos == Pos::verb && !ends_with(first, "ing")) {
    if (!subject) {
      // Imperative. A verb with nothing but numbers after it is a label ("Step 1").
      if (!has_complement(tt)) return {};
      return {finish(core)};
    }
    for (const auto& vp : split_verb_phrases(core, tt)) {
      out.push_back(*subject + " " + lower_first(text::trim(vp)));
    }
  } else if (!has_verb(tt)) {
    if (!subject) return {};
    if (tt[0].pos == Pos::adjective) {
      out.push_back(*subject + " is " + lower_first(core));
    } else if (is_nominal(tt[0].pos) && tt.size() > 2 && tt[1].token.kind == TokenKind::number) {
      out.push_back(*subject + "'s " + lower_first(tt[0].token.text) + " is " +
                    core.substr(tt[1].token.span.start));
    } else if (is_nominal(tt[0].pos) || tt[0].pos == Pos::adjective || tt[0].pos == Pos::determiner) {
      out.push_back(*subject + " is " + article_for(tt) + lower_first(core));
    } else {
      return {};
    }
  } else {
    out.push_back(core);
  }
  std::vector<std::string> split;
  for (const auto& c : out) {
    for (auto& s : split_final_alternatives(c)) split.push_back(finish(s));
  }
  return split;
}

bool is_pure(const std::string& s, const std::optional<NounPhrase>& entity, const FffConfig& cfg) {
  if (!entity) return true;
  const auto tt = nlp::tag_text(s);
  std::vector<std::string> texts{strip_determiner(*entity)};
  for (const auto& np : statement_phrases(s, tt)) {
    if (!refers_to(np, *entity)) texts.push_back(strip_determiner(np));
  }
  if (texts.size() < 2) return true;
  const auto vecs = embed_batch(provider_of(cfg), texts, cfg.cache);
  for (std::size_t i = 1; i < vecs.size(); ++i) {
    if (cosine_similarity(vecs[0], vecs[i]) >= cfg.collision.threshold) return false;
  }
  return true;
}

std::string describe(const ValidationResult& v) {
  std::vector<std::string> parts;
  for (const auto& x : v.violations) parts.push_back(std::string("(") + x.rule + ") " + x.detail);
  return text::join(parts, "; ");
}

std::vector<std::string> response_lines(const std::string& content) {
  std::vector<std::string> out;
  for (auto line : text::split(content, '\n')) {
    line = text::trim(line);
    if (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0) line = text::trim(line.substr(2));
    std::size_t d = 0;
    while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
    if (d > 0 && d + 1 < line.size() && (line[d] == '.' || line[d] == ')') && line[d + 1] == ' ') {
      line = text::trim(line.substr(d + 2));
    }
    if (line.empty() || text::ascii_lower(line) == "none") continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace

std::string entity_display(const NounPhrase& np) { return text::capitalize_first(strip_determiner(np)); }

std::string decode_passage(const std::string& passage) { return text::decode_escapes(passage); }

ValidationResult validate_statement(const std::string& s, const std::optional<NounPhrase>& entity,
                                    const FffConfig& config) {
  const auto& wc = nlp::WordClasses::instance();
  ValidationResult r;
  const auto tt = nlp::tag_text(s);

  for (std::size_t i = 0; i < tt.size(); ++i) {
    const std::string w = lower_at(tt, i);
    if (tt[i].token.kind == TokenKind::word && wc.in("anaphoric", w)) {
      r.violations.push_back({'a', "pronoun '" + tt[i].token.text + "'"});
    }
  }

  const ClauseInfo clauses = analyze_clauses(tt);
  const std::size_t subject_end = clauses.top.empty() ? s.size() : tt[clauses.top.front().first].token.span.start;
  const auto nps = nlp::chunk(s, tt);
  for (const auto& np : nps) {
    if (np.container || np.span.end > subject_end) continue;
    if (!entity || refers_to(np, *entity)) {
      r.subject = np;
      break;
    }
  }
  if (!r.subject) {
    bool ok = false;
    if (!entity) {
      for (std::size_t i = 0; i < tt.size() && tt[i].token.span.end <= subject_end; ++i) {
        if (nlp::is_subject_pronoun(lower_at(tt, i))) ok = true;
      }
      if (!clauses.top.empty() && clauses.top.front().first == 0 && has_complement(tt)) ok = true;  // imperative
    }
    if (!ok) {
      r.violations.push_back({'b', entity ? "subject is not " + strip_determiner(*entity) : "no subject"});
    }
  }

  if (clauses.top.size() != 1) {
    r.violations.push_back({'c', std::to_string(clauses.top.size()) + " top-level finite verb groups"});
  }
  if (clauses.participial_adjunct) r.violations.push_back({'c', "participial clause"});
  if (clauses.stacked) r.violations.push_back({'c', "two finite verbs in one group"});

  std::size_t words = 0;
  for (const auto& t : tt) {
    if (t.token.kind != TokenKind::punctuation) ++words;
  }
  if (words > config.max_tokens) {
    r.violations.push_back({'d', std::to_string(words) + " tokens (max " + std::to_string(config.max_tokens) + ")"});
  }

  const auto phrases = statement_phrases(s, tt);
  if (phrases.size() >= 2) {
    for (const auto& p : detect_collisions(phrases, provider_of(config), config.collision, AliasTable::defaults(),
                                           config.cache)) {
      r.violations.push_back({'e', "'" + strip_determiner(p.left) + "' collides with '" + strip_determiner(p.right) + "'"});
    }
  }
  return r;
}

ExtractionResult passage_to_statements(const std::string& passage, int passage_index,
                                       const std::optional<NounPhrase>& entity, ChatClient* llm,
                                       const FffConfig& config) {
  if (text::trim(passage).empty()) throw Error(ErrorKind::invalid_input, "passage is empty");
  ExtractionResult result;
  const std::string decoded = decode_passage(passage);
  const auto source_numbers = numeric_tokens(decoded);
  std::set<std::string> seen;
  std::optional<NounPhrase> ctx;
  bool llm_ok = llm != nullptr && config.use_llm;

  auto add = [&](const std::string& s, const ValidationResult& v, const nlp::Span& span, bool from_llm) {
    if (!seen.insert(text::ascii_lower(s)).second) return;
    Statement st;
    st.text = s;
    st.subject_np = v.subject.value_or(NounPhrase{});
    st.source_passage_index = passage_index;
    st.source_span = span;
    st.from_llm = from_llm;
    result.statements.push_back(std::move(st));
  };

  for (const auto& sentence : nlp::split_sentences(decoded)) {
    std::string body = sentence.text;
    auto tt = nlp::tag_text(body);
    bool labelled = false;

    // "Calcium: ..." names what follows.
    for (std::size_t i = 0; i < tt.size(); ++i) {
      if (tt[i].token.text != ":") continue;
      if (is_label(tt, i)) {
        labelled = true;
        for (const auto& np : nlp::chunk(body, tt)) {
          if (!np.container && np.span.end <= tt[i].token.span.start) {
            ctx = np;
            break;
          }
        }
        body = body.substr(tt[i].token.span.end);
        tt = nlp::tag_text(body);
      }
      break;
    }
    // "Physical Properties --..." is an aspect label.
    for (std::size_t i = 0; i < tt.size(); ++i) {
      if (!is_dash(tt[i].token.text)) continue;
      if (is_label(tt, i)) {
        labelled = false;
        body = body.substr(tt[i].token.span.end);
        tt = nlp::tag_text(body);
      }
      break;
    }
    const std::string core = without_end_punct(body);
    if (core.empty()) continue;
    const auto core_tt = nlp::tag_text(core);
    // "Calcium: Facts" has no verb after its label; it is a heading too.
    if (is_title(core_tt) || (labelled && !has_verb(core_tt) && text::starts_with_upper(core))) {
      const auto nps = nlp::chunk(core, core_tt);
      for (const auto& np : nps) {
        if (!np.container || np.complement_head.empty()) continue;
        for (const auto& b : nps) {
          if (!b.container && b.head == np.complement_head && b.span.start > np.span.start) ctx = b;
        }
      }
      continue;
    }

    const auto phrases = statement_phrases(core, core_tt);
    bool mentions = false;
    if (entity) {
      mentions = std::any_of(phrases.begin(), phrases.end(), [&](const NounPhrase& np) { return refers_to(np, *entity); });
    }
    const bool in_ctx = entity && ctx && refers_to(*ctx, *entity);
    const bool candidate = !entity || mentions || in_ctx;

    if (candidate) {
      std::optional<std::string> subject;
      if (in_ctx) subject = entity_display(*ctx);
      const auto cands = deterministic_candidates(body, subject);
      bool all_ok = !cands.empty();
      std::vector<ValidationResult> checks;
      for (const auto& c : cands) {
        checks.push_back(validate_statement(c, entity, config));
        if (!checks.back().valid() || !is_pure(c, entity, config)) all_ok = false;
      }
      if (all_ok) {
        for (std::size_t i = 0; i < cands.size(); ++i) add(cands[i], checks[i], sentence.span, false);
      } else if (llm_ok) {
        ChatRequest req;
        req.model = config.model;
        req.temperature = config.temperature;
        const std::string system =
            entity ? fill_template(prompt_template("fff_system"), {{"entity", entity_display(*entity)}})
                   : prompt_template("fff_system_open");
        const std::string user = fill_template(
            prompt_template("fff_user"),
            {{"context", ctx ? entity_display(*ctx) : std::string("none")}, {"sentence", text::trim(sentence.text)}});
        req.messages = {{Role::system, system}, {Role::user, user}};
        try {
          const auto resp = llm->chat(req);
          const auto lines = response_lines(resp.content);
          if (lines.empty()) result.log.push_back("no facts returned for: \"" + text::trim(sentence.text) + "\"");
          for (const auto& line : lines) {
            const std::string s = finish(line);
            const auto v = validate_statement(s, entity, config);
            if (!v.valid()) {
              result.log.push_back("rejected \"" + s + "\": " + describe(v));
              continue;
            }
            bool numbers_ok = true;
            for (const auto& n : numeric_tokens(s)) {
              if (!source_numbers.count(n)) numbers_ok = false;
            }
            if (!numbers_ok) {
              result.log.push_back("rejected \"" + s + "\": number or unit not in passage");
              continue;
            }
            if (!is_supported(s, {decoded}).supported) {
              result.log.push_back("rejected \"" + s + "\": not supported by passage");
              continue;
            }
            if (!is_pure(s, entity, config)) {
              result.log.push_back("rejected \"" + s + "\": mentions another entity");
              continue;
            }
            add(s, v, sentence.span, true);
          }
        } catch (const Error& e) {
          llm_ok = false;
          result.degraded = true;
          result.log.push_back(std::string("rewrite model failed: ") + e.what());
        }
      } else {
        result.log.push_back("discarded sentence: \"" + text::trim(sentence.text) + "\"");
      }
    }

    // A capitalized sentence that opens with its subject becomes the context.
    const ClauseInfo clauses = analyze_clauses(core_tt);
    if (!clauses.top.empty() && text::starts_with_upper(core) && !core_tt.empty() &&
        core_tt[0].pos != Pos::pronoun) {
      const std::size_t verb_start = core_tt[clauses.top.front().first].token.span.start;
      for (const auto& np : nlp::chunk(core, core_tt)) {
        if (np.container || np.span.end > verb_start) continue;
        ctx = np;
        break;
      }
    }
  }
  return result;
}

bool StatementCache::lookup(const std::string& entity, const std::string& passage_hash, ExtractionResult& out) const {
  std::lock_guard<std::mutex> lk(mu_);
  const auto it = entries_.find({entity, passage_hash});
  if (it == entries_.end()) return false;
  out = it->second;
  return true;
}

void StatementCache::store(const std::string& entity, const std::string& passage_hash, const ExtractionResult& r) {
  std::lock_guard<std::mutex> lk(mu_);
  entries_[{entity, passage_hash}] = r;
}

std::size_t StatementCache::size() const {
  std::lock_guard<std::mutex> lk(mu_);
  return entries_.size();
}

std::vector<QueryPacket> build_fact_sets(const std::vector<std::string>& passages,
                                         const std::vector<AtomicQuery>& queries, ChatClient* llm,
                                         const FffConfig& config, StatementCache* cache) {
  StatementCache local;
  if (!cache) cache = &local;

  struct Job {
    std::string key;
    std::optional<NounPhrase> entity;
    std::size_t passage = 0;
    ExtractionResult result;
  };
  std::vector<std::string> keys;
  std::vector<std::optional<NounPhrase>> entities;
  std::map<std::pair<std::string, std::size_t>, std::size_t> job_of;
  std::vector<Job> jobs;
  for (const auto& q : queries) {
    auto e = query_entity(q);
    const std::string key = e ? nlp::normalize_np(strip_determiner(*e)) : std::string();
    keys.push_back(key);
    entities.push_back(e);
    for (std::size_t p = 0; p < passages.size(); ++p) {
      if (text::trim(passages[p]).empty() || job_of.count({key, p})) continue;
      job_of[{key, p}] = jobs.size();
      jobs.push_back(Job{key, e, p, {}});
    }
  }

  auto run = [&](Job& job) {
    const std::string hash = text::sha256_hex(passages[job.passage]);
    if (cache->lookup(job.key, hash, job.result)) return;
    job.result = passage_to_statements(passages[job.passage], static_cast<int>(job.passage), job.entity, llm, config);
    cache->store(job.key, hash, job.result);
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, jobs.size()));
  if (workers <= 1) {
    for (auto& j : jobs) run(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < jobs.size(); i = next++) run(jobs[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<QueryPacket> packets;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    QueryPacket pk;
    pk.atomic_query = queries[qi];
    pk.fact_set.entity = entities[qi];
    for (std::size_t p = 0; p < passages.size(); ++p) {
      const auto it = job_of.find({keys[qi], p});
      if (it == job_of.end()) continue;
      const auto& r = jobs[it->second].result;
      pk.degraded = pk.degraded || r.degraded;
      for (const auto& l : r.log) pk.log.push_back("passage " + std::to_string(p + 1) + ": " + l);
      if (r.statements.empty()) continue;
      Section sec;
      sec.index = static_cast<int>(pk.fact_set.sections.size()) + 1;
      sec.passage_index = static_cast<int>(p);
      sec.statements = r.statements;
      pk.fact_set.sections.push_back(std::move(sec));
    }
    pk.empty = pk.fact_set.empty();
    packets.push_back(std::move(pk));
  }
  return packets;
}

nlohmann::json to_json(const FactSet& fs) {
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& s : fs.sections) {
    nlohmann::json st = nlohmann::json::array();
    for (const auto& x : s.statements) st.push_back(x.text);
    sections.push_back({{"index", s.index}, {"statements", st}});
  }
  return {{"entity", fs.entity ? nlohmann::json(entity_display(*fs.entity)) : nlohmann::json(nullptr)},
          {"sections", sections}};
}

}  // namespace acurai
