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

#include "acurai/faithfulness.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "acurai/collision.hpp"
#include "acurai/nlp.hpp"
#include "acurai/stem.hpp"
#include "acurai/text.hpp"

namespace acurai {

const char* to_string(Verdict v) noexcept {
  return v == Verdict::faithful ? "faithful" : "hallucination";
}

std::vector<std::string> FaithfulnessReport::unsupported() const {
  std::vector<std::string> out;
  for (const auto& r : statement_results) {
    if (!r.supported) out.push_back(r.statement);
  }
  return out;
}

namespace {

using nlp::Pos;
using nlp::TokenKind;

enum class ItemKind { word, number, unit };

struct Item {
  std::string key;
  ItemKind kind = ItemKind::word;
  friend bool operator<(const Item& a, const Item& b) {
    return a.kind != b.kind ? a.kind < b.kind : a.key < b.key;
  }
};

struct Analysis {
  std::vector<Item> items;                                   // ordered, unique
  std::set<std::pair<std::string, std::string>> containers;  // (head, complement)
  std::vector<std::pair<std::string, std::string>> relational;
  std::set<std::string> negators;
  std::set<std::string> applied;
};

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || u >= 0x80;
}

bool boundary_ok(const std::string& s, std::size_t pos, std::size_t len) {
  const bool left = pos == 0 || !is_word_char(s[pos - 1]);
  const bool right = pos + len >= s.size() || !is_word_char(s[pos + len]);
  return left && right;
}

// Replaces whole-word occurrences of `needle` (case-insensitive unless
// `exact`) with `with`. Returns true if anything changed.
bool replace_phrase(std::string& s, const std::string& needle, const std::string& with, bool exact) {
  if (needle.empty()) return false;
  bool changed = false;
  const std::string hay_lower = exact ? std::string() : text::ascii_lower(s);
  const std::string n = exact ? needle : text::ascii_lower(needle);
  std::string out;
  std::size_t i = 0;
  const std::string& hay = exact ? s : hay_lower;
  while (i < s.size()) {
    const auto p = hay.find(n, i);
    if (p == std::string::npos) break;
    if (boundary_ok(s, p, n.size())) {
      out += s.substr(i, p - i) + with;
      i = p + n.size();
      changed = true;
    } else {
      out += s.substr(i, p + 1 - i);
      i = p + 1;
    }
  }
  out += s.substr(i);
  if (changed) s = out;
  return changed;
}

std::string alias_token(int group) { return "aliasgroup" + std::to_string(group) + "x"; }

std::string preprocess(const std::string& in, std::set<std::string>& applied) {
  std::string s = text::decode_escapes(in);
  if (s != in) applied.insert("unicode-escapes");
  const auto& wc = nlp::WordClasses::instance();
  // Straight apostrophes so idioms and clitics compare uniformly.
  s = text::replace_all(s, "\xE2\x80\x99", "'");
  std::vector<std::string> idioms(wc.members("idiom").begin(), wc.members("idiom").end());
  std::stable_sort(idioms.begin(), idioms.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  for (const auto& idiom : idioms) {
    if (replace_phrase(s, idiom, " ", false)) applied.insert("discourse-idiom");
  }
  for (const auto& [term, group] : AliasTable::defaults().terms()) {
    bool caps = false;
    for (const char c : term) caps |= std::isupper(static_cast<unsigned char>(c)) != 0;
    if (replace_phrase(s, term, " " + alias_token(group) + " ", caps)) applied.insert("alias");
  }
  return s;
}

long long number_value(const std::string& digits) {
  std::string d;
  for (const char c : digits) {
    if (std::isdigit(static_cast<unsigned char>(c))) d += c;
    else if (c == '.') break;
  }
  if (d.empty() || d.size() > 15) return -1;
  return std::stoll(d);
}

bool is_ordinal(const std::string& t) {
  if (t.size() < 3) return false;
  const std::string suf = text::ascii_lower(t.substr(t.size() - 2));
  return std::isdigit(static_cast<unsigned char>(t[t.size() - 3])) &&
         (suf == "st" || suf == "nd" || suf == "rd" || suf == "th");
}

bool is_decade(const std::string& t) {
  return t.size() >= 3 && t.back() == 's' && std::isdigit(static_cast<unsigned char>(t[t.size() - 2]));
}

std::string number_key(const std::string& t) {
  std::string out;
  for (const char c : t) {
    if (c != ',') out += c;
  }
  return "#" + out;
}

bool word_match(const std::string& a, const std::string& b) {
  if (a == b) return true;
  const std::string& s = a.size() < b.size() ? a : b;
  const std::string& l = a.size() < b.size() ? b : a;
  return s.size() >= 4 && l.size() - s.size() <= 2 && l.compare(0, s.size(), s) == 0;
}

const std::set<std::string>& unit_symbols() {
  static const std::set<std::string> u = {"\xC2\xB0" "C", "\xC2\xB0" "F", "\xC2\xB0" "K",
                                          "\xC2\xB0", "%", "$", "\xE2\x82\xAC", "\xC2\xA3",
                                          "+", "\xC2\xB1", "^", "\xC2\xB2", "\xC2\xB3"};
  return u;
}

Analysis analyze(const std::string& raw) {
  Analysis a;
  const std::string s = preprocess(raw, a.applied);
  const auto tagged = nlp::tag_text(s);
  const auto& wc = nlp::WordClasses::instance();
  const std::size_t n = tagged.size();
  std::set<Item> seen;
  auto add = [&](Item it) {
    if (seen.insert(it).second) a.items.push_back(std::move(it));
  };
  std::vector<bool> consumed(n, false);
  auto lower = [&](std::size_t i) { return text::ascii_lower(tagged[i].token.text); };

  for (std::size_t i = 0; i < n; ++i) {
    if (consumed[i]) continue;
    const auto& tok = tagged[i].token;
    const std::string w = lower(i);
    if (tok.kind == TokenKind::number) {
      if (is_decade(tok.text)) {
        const long long v = number_value(tok.text);
        if (v >= 100 && v % 100 == 0) {
          add({"C" + std::to_string(v / 100 + 1), ItemKind::number});
          a.applied.insert("century-canon");
          continue;
        }
      }
      if (is_ordinal(tok.text)) {
        // "18th century", and "18th and early 20th century" (shared head).
        std::size_t k = i + 1;
        bool century = false;
        if (k < n && (lower(k) == "century" || lower(k) == "centuries")) {
          century = true;
          consumed[k] = true;
        } else {
          std::size_t q = k;
          while (q < n && q < i + 6) {
            const std::string lw = lower(q);
            if (lw == "century" || lw == "centuries") {
              century = true;
              break;
            }
            if (tagged[q].token.kind == TokenKind::punctuation && lw != "-" && lw != "\xE2\x80\x93") break;
            ++q;
          }
        }
        if (century) {
          add({"C" + std::to_string(number_value(tok.text)), ItemKind::number});
          a.applied.insert("century-canon");
          continue;
        }
        add({"#" + std::to_string(number_value(tok.text)), ItemKind::number});
        continue;
      }
      add({number_key(tok.text), ItemKind::number});
      continue;
    }
    if (tok.kind == TokenKind::symbol || tok.kind == TokenKind::punctuation) {
      if (unit_symbols().count(tok.text) != 0) add({"u:" + tok.text, ItemKind::unit});
      continue;
    }
    if (tok.kind == TokenKind::unit) {
      add({text::ascii_lower(tok.text), ItemKind::word});
      continue;
    }
    const long long nv = wc.number_value(w);
    if (nv >= 0) {
      add({"#" + std::to_string(nv), ItemKind::number});
      continue;
    }
    if ((w == "a" || w == "an") && i + 1 < n) {
      const std::string next = nlp::lemmatize(tagged[i + 1].token.text, Pos::noun);
      if (wc.in("time-unit", next)) add({"#1", ItemKind::number});
      continue;
    }
    if (wc.in("negator", w)) {
      a.negators.insert(w == "n't" ? "not" : w);
      continue;
    }
    const Pos p = tagged[i].pos;
    // Manner adverbs carry meaning: "reacts slowly" is not "reacts steadily".
    if (p == Pos::other && tok.kind == TokenKind::word && w.size() > 4 && w.compare(w.size() - 2, 2, "ly") == 0 &&
        !wc.in("discourse-adverb", w)) {
      add({porter_stem(w), ItemKind::word});
      continue;
    }
    if (p != Pos::noun && p != Pos::proper_noun && p != Pos::adjective && p != Pos::verb) continue;
    if (w.rfind("aliasgroup", 0) == 0) {
      add({w, ItemKind::word});
      continue;
    }
    const std::string lemma = nlp::lemmatize(tok.text, p == Pos::proper_noun ? Pos::noun : p);
    if (p == Pos::verb && (nlp::is_auxiliary(w) || wc.in("support-verb", lemma))) continue;
    if (p == Pos::adjective && wc.in("stance", lemma)) continue;
    if ((p == Pos::noun || p == Pos::proper_noun) && wc.in("light-noun", lemma) && i + 1 < n &&
        (lower(i + 1) == "of" || lower(i + 1) == "from")) {
      continue;
    }
    if (lemma == "century" || lemma == "centuries") {
      add({"century", ItemKind::word});
      continue;
    }
    add({porter_stem(lemma), ItemKind::word});
  }

  for (const auto& np : nlp::chunk(s, tagged)) {
    if (!np.container || np.complement_head.empty()) continue;
    a.containers.emplace(np.head, np.complement_head);
    if (wc.in("relational", np.head)) a.relational.emplace_back(np.head, np.complement_head);
  }
  return a;
}

struct Coverage {
  std::size_t covered = 0;
  std::vector<std::string> missing;
  std::vector<std::string> reasons;
};

Coverage cover(const Analysis& stmt, const Analysis& src) {
  Coverage c;
  for (const auto& it : stmt.items) {
    bool found = false;
    for (const auto& s : src.items) {
      if (s.kind != it.kind) continue;
      if (it.kind == ItemKind::word ? word_match(it.key, s.key) : it.key == s.key) {
        found = true;
        break;
      }
    }
    if (found) {
      ++c.covered;
    } else {
      c.missing.push_back(it.key);
      if (it.kind == ItemKind::number) c.reasons.push_back("number " + it.key.substr(it.key[0] == '#' ? 1 : 0) + " absent from source");
    }
  }
  for (const auto& [head, comp] : stmt.relational) {
    if (src.containers.count({head, comp}) == 0) {
      c.reasons.push_back("location \"" + head + " of " + comp + "\" not in source");
    }
  }
  for (const auto& neg : stmt.negators) {
    if (src.negators.empty()) c.reasons.push_back("negation \"" + neg + "\" not in source");
  }
  return c;
}

SupportResult support_from(const Analysis& stmt, const std::vector<std::string>& sources,
                           const std::vector<Analysis>& analyses) {
  SupportResult best;
  best.score = -1.0;
  bool best_ok = false;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const Coverage c = cover(stmt, analyses[k]);
    const double score = stmt.items.empty() ? 1.0
                                            : static_cast<double>(c.covered) /
                                                  static_cast<double>(stmt.items.size());
    const bool ok = c.missing.empty() && c.reasons.empty();
    const bool better = (ok && !best_ok) || (ok == best_ok && score > best.score);
    if (better) {
      best.supported = ok;
      best.best_match = sources[k];
      best.score = score;
      best.missing = c.missing;
      best.reasons = c.reasons;
      best_ok = ok;
    }
  }
  if (best.score < 0.0) best.score = 0.0;
  return best;
}

bool is_layout_line(const std::string& line) {
  std::string t = text::trim(line);
  if (t.empty()) return true;
  if (t[0] == '#') return true;
  if (t.rfind("No supporting facts found", 0) == 0) return true;
  const bool bold = t.size() >= 4 && t.rfind("**", 0) == 0 && t.compare(t.size() - 2, 2, "**") == 0;
  if (bold) return true;
  std::string bare = t;
  while (!bare.empty() && (bare.back() == ':' || bare.back() == '*')) bare.pop_back();
  while (!bare.empty() && bare.front() == '*') bare.erase(bare.begin());
  bare = text::trim(bare);
  if (text::ascii_lower(bare) == "specifics") return true;
  if (bare.rfind("Detail ", 0) == 0) {
    const std::string num = bare.substr(7);
    return !num.empty() && std::all_of(num.begin(), num.end(),
                                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  }
  return false;
}

std::string strip_bullet(const std::string& line) {
  std::string t = text::trim(line);
  for (const char* b : {"- ", "* ", "\xE2\x80\xA2 "}) {
    if (t.rfind(b, 0) == 0) return text::trim(t.substr(std::char_traits<char>::length(b)));
  }
  std::size_t k = 0;
  while (k < t.size() && std::isdigit(static_cast<unsigned char>(t[k]))) ++k;
  if (k > 0 && k + 1 < t.size() && (t[k] == '.' || t[k] == ')') && t[k + 1] == ' ') {
    return text::trim(t.substr(k + 2));
  }
  return t;
}

}  // namespace

std::string normalize(const std::string& in) {
  std::set<std::string> applied;
  std::string s = text::decode_escapes(in);
  s = text::replace_all(s, "\xE2\x80\x99", "'");
  const auto tagged = nlp::tag_text(s);
  const std::size_t n = tagged.size();
  std::vector<std::string> out;
  auto lower = [&](std::size_t i) { return text::ascii_lower(tagged[i].token.text); };
  for (std::size_t i = 0; i < n; ++i) {
    const auto& tok = tagged[i].token;
    const std::string w = lower(i);
    if (tok.kind == TokenKind::number && is_decade(tok.text)) {
      const long long v = number_value(tok.text);
      if (v >= 100 && v % 100 == 0) {
        out.push_back("C" + std::to_string(v / 100 + 1));
        continue;
      }
    }
    if (tok.kind == TokenKind::number && is_ordinal(tok.text)) {
      if (i + 1 < n && (lower(i + 1) == "century" || lower(i + 1) == "centuries")) {
        out.push_back("C" + std::to_string(number_value(tok.text)));
        ++i;
        continue;
      }
      bool later = false;
      for (std::size_t q = i + 1; q < n && q < i + 6; ++q) {
        if (lower(q) == "century" || lower(q) == "centuries") later = true;
      }
      if (later) {
        out.push_back("C" + std::to_string(number_value(tok.text)));
        continue;
      }
    }
    // "X's Y" becomes "Y of X".
    if (i + 2 < n && lower(i + 1) == "'s" && tagged[i + 1].pos == Pos::other &&
        (tagged[i + 2].pos == Pos::noun || tagged[i + 2].pos == Pos::proper_noun)) {
      out.push_back(nlp::lemmatize(tagged[i + 2].token.text, Pos::noun));
      out.push_back("of");
      out.push_back(nlp::lemmatize(tok.text, Pos::noun));
      i += 2;
      continue;
    }
    if (w == "century" || w == "centuries") {
      // Only reached when not folded into a preceding ordinal.
      bool folded = false;
      for (std::size_t q = (i >= 5 ? i - 5 : 0); q < i; ++q) {
        folded |= tagged[q].token.kind == TokenKind::number && is_ordinal(tagged[q].token.text);
      }
      if (folded) continue;
    }
    const Pos p = tagged[i].pos;
    if (p == Pos::noun || p == Pos::proper_noun || p == Pos::verb) {
      out.push_back(nlp::lemmatize(tok.text, p == Pos::proper_noun ? Pos::noun : p));
    } else {
      out.push_back(w);
    }
  }
  return text::join(out, " ");
}

std::vector<std::string> segment_response(const std::string& response) {
  std::vector<std::string> out;
  std::string body;
  for (const auto& line : text::split(response, '\n')) {
    if (is_layout_line(line)) {
      body += "\n\n";
      continue;
    }
    body += strip_bullet(line) + "\n\n";
  }
  for (const auto& s : nlp::split_sentences(body)) {
    const std::string t = text::trim(s.text);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

SupportResult is_supported(const std::string& statement, const std::vector<std::string>& sources) {
  std::vector<Analysis> analyses;
  analyses.reserve(sources.size());
  for (const auto& s : sources) analyses.push_back(analyze(s));
  return support_from(analyze(statement), sources, analyses);
}

FaithfulnessReport check_response(const std::string& response, const std::vector<std::string>& sources) {
  FaithfulnessReport report;
  const auto statements = segment_response(response);
  if (statements.empty()) {
    report.empty = true;
    return report;
  }
  std::vector<Analysis> analyses;
  analyses.reserve(sources.size());
  std::set<std::string> applied;
  for (const auto& s : sources) {
    analyses.push_back(analyze(s));
    applied.insert(analyses.back().applied.begin(), analyses.back().applied.end());
  }
  for (const auto& st : statements) {
    const Analysis a = analyze(st);
    applied.insert(a.applied.begin(), a.applied.end());
    const SupportResult r = support_from(a, sources, analyses);
    report.statement_results.push_back(
        StatementResult{st, r.supported, r.best_match, r.score, r.missing, r.reasons});
    if (!r.supported) report.verdict = Verdict::hallucination;
  }
  report.normalizations_applied.assign(applied.begin(), applied.end());
  return report;
}

nlohmann::json to_json(const FaithfulnessReport& report) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& r : report.statement_results) {
    nlohmann::json j = {{"statement", r.statement},
                        {"status", r.supported ? "supported" : "unsupported"},
                        {"score", r.score},
                        {"best_match", r.best_match ? nlohmann::json(*r.best_match) : nlohmann::json()}};
    if (!r.missing.empty()) j["missing"] = r.missing;
    if (!r.reasons.empty()) j["reasons"] = r.reasons;
    results.push_back(std::move(j));
  }
  return {{"verdict", to_string(report.verdict)},
          {"empty", report.empty},
          {"statement_results", std::move(results)},
          {"normalizations_applied", report.normalizations_applied}};
}

}  // namespace acurai
