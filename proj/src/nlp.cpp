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

#include "acurai/nlp.hpp"

#include <algorithm>
#include <sstream>

#include "acurai/resources.hpp"
#include "acurai/text.hpp"

namespace acurai::nlp {

namespace {

bool is_ascii_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char32_t decode_at(std::string_view s, std::size_t i, std::size_t& len) {
  const auto lead = static_cast<unsigned char>(s[i]);
  len = text::utf8_length(lead);
  if (i + len > s.size()) len = 1;
  if (len == 1) return lead;
  char32_t cp = lead & (0xFF >> (len + 1));
  for (std::size_t k = 1; k < len; ++k) {
    cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
  }
  return cp;
}

bool is_unicode_space(char32_t cp) {
  return cp == 0xA0 || (cp >= 0x2000 && cp <= 0x200B) || cp == 0x202F || cp == 0x3000 ||
         cp == 0xFEFF;
}

bool is_unicode_punct(char32_t cp) {
  switch (cp) {
    case 0x2026: case 0x2013: case 0x2014: case 0x2012: case 0x2015:
    case 0x201C: case 0x201D: case 0x2018: case 0x2019: case 0x201E:
    case 0xAB: case 0xBB: case 0xBF: case 0xA1: case 0x2022: case 0xB7:
      return true;
    default:
      return false;
  }
}

bool is_unicode_symbol(char32_t cp) {
  switch (cp) {
    case 0xB0: case 0xB1: case 0xB2: case 0xB3: case 0xB9: case 0xA2: case 0xA3:
    case 0xA5: case 0x20AC: case 0xA9: case 0xAE: case 0x2122: case 0xD7:
    case 0xF7: case 0xB5: case 0xA7: case 0xB6: case 0x2030: case 0x2032:
    case 0x2033: case 0x2190: case 0x2192: case 0x2264: case 0x2265: case 0x2248:
    case 0x2260: case 0x221E:
      return true;
    default:
      return false;
  }
}

// Letters include every non-ASCII code point outside the punctuation/symbol lists.
bool is_letter_at(std::string_view s, std::size_t i) {
  if (i >= s.size()) return false;
  const auto c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) return is_ascii_alpha(c);
  std::size_t len = 0;
  const char32_t cp = decode_at(s, i, len);
  return !is_unicode_space(cp) && !is_unicode_punct(cp) && !is_unicode_symbol(cp);
}

bool is_alnum_at(std::string_view s, std::size_t i) {
  return i < s.size() && (is_ascii_digit(static_cast<unsigned char>(s[i])) || is_letter_at(s, i));
}

bool ascii_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?': case '\'': case '"':
    case '(': case ')': case '[': case ']': case '{': case '}': case '-': case '/':
      return true;
    default:
      return false;
  }
}

// Apostrophe forms: ASCII ' and U+2019.
std::size_t apostrophe_len(std::string_view s, std::size_t i) {
  if (i < s.size() && s[i] == '\'') return 1;
  if (s.substr(i, 3) == "\xE2\x80\x99") return 3;
  return 0;
}

bool starts_with_ci(std::string_view s, std::size_t i, std::string_view p) {
  if (i + p.size() > s.size()) return false;
  for (std::size_t k = 0; k < p.size(); ++k) {
    char c = s[i + k];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != p[k]) return false;
  }
  return true;
}

const std::set<std::string>& empty_set() {
  static const std::set<std::string> e;
  return e;
}

Pos parse_pos(const std::string& s) {
  if (s == "noun") return Pos::noun;
  if (s == "proper-noun") return Pos::proper_noun;
  if (s == "adjective") return Pos::adjective;
  if (s == "determiner") return Pos::determiner;
  if (s == "verb") return Pos::verb;
  if (s == "pronoun") return Pos::pronoun;
  if (s == "preposition") return Pos::preposition;
  if (s == "conjunction") return Pos::conjunction;
  return Pos::other;
}

}  // namespace

const char* to_string(Pos pos) noexcept {
  switch (pos) {
    case Pos::noun: return "noun";
    case Pos::proper_noun: return "proper-noun";
    case Pos::adjective: return "adjective";
    case Pos::determiner: return "determiner";
    case Pos::verb: return "verb";
    case Pos::pronoun: return "pronoun";
    case Pos::preposition: return "preposition";
    case Pos::conjunction: return "conjunction";
    case Pos::other: return "other";
  }
  return "other";
}

const char* to_string(TokenKind kind) noexcept {
  switch (kind) {
    case TokenKind::word: return "word";
    case TokenKind::number: return "number";
    case TokenKind::punctuation: return "punctuation";
    case TokenKind::symbol: return "symbol";
    case TokenKind::unit: return "unit";
  }
  return "word";
}

// ---------------------------------------------------------------------------
// Lexicon / word classes

Lexicon::Lexicon(std::string_view lexicon_tsv, std::string_view irregular_tsv) {
  std::istringstream in{std::string(lexicon_tsv)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() < 2) continue;
    auto& tags = entries_[text::ascii_lower(cols[0])];
    for (std::size_t k = 1; k < cols.size(); ++k) {
      const Pos p = parse_pos(text::trim(cols[k]));
      if (std::find(tags.begin(), tags.end(), p) == tags.end()) tags.push_back(p);
    }
  }
  std::istringstream irr{std::string(irregular_tsv)};
  while (std::getline(irr, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() < 2) continue;
    irregular_.emplace(text::ascii_lower(cols[0]), text::ascii_lower(text::trim(cols[1])));
  }
}

const Lexicon& Lexicon::instance() {
  static const Lexicon lex(resources::lexicon(), resources::irregular());
  return lex;
}

const std::vector<Pos>& Lexicon::tags(const std::string& lower) const {
  static const std::vector<Pos> none;
  const auto it = entries_.find(lower);
  return it == entries_.end() ? none : it->second;
}

bool Lexicon::has(const std::string& lower, Pos pos) const {
  const auto& t = tags(lower);
  return std::find(t.begin(), t.end(), pos) != t.end();
}

std::string Lexicon::irregular(const std::string& lower) const {
  const auto it = irregular_.find(lower);
  return it == irregular_.end() ? std::string() : it->second;
}

WordClasses::WordClasses(std::string_view tsv) {
  std::istringstream in{std::string(tsv)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() < 2) continue;
    const std::string word = text::ascii_lower(cols[0]);
    const std::string cls = text::trim(cols[1]);
    classes_[cls].insert(word);
    if (cols.size() >= 3) values_[word] = std::stoll(cols[2]);
  }
}

const WordClasses& WordClasses::instance() {
  static const WordClasses wc(resources::wordclasses());
  return wc;
}

bool WordClasses::in(std::string_view cls, const std::string& lower) const {
  const auto it = classes_.find(cls);
  return it != classes_.end() && it->second.count(lower) != 0;
}

const std::set<std::string>& WordClasses::members(std::string_view cls) const {
  const auto it = classes_.find(cls);
  return it == classes_.end() ? empty_set() : it->second;
}

long long WordClasses::number_value(const std::string& lower) const {
  const auto it = values_.find(lower);
  return it == values_.end() ? -1 : it->second;
}

// ---------------------------------------------------------------------------
// Closed-class helpers

bool is_modal(const std::string& w) {
  static const std::set<std::string> modals = {"can", "could", "will", "would", "shall", "should",
                                               "may", "might", "must", "ought", "'ll", "ca", "wo"};
  return modals.count(w) != 0;
}

bool is_auxiliary(const std::string& w) {
  static const std::set<std::string> aux = {
      "be",   "am",  "is",     "are",  "was", "were", "been", "being", "have", "has", "had",
      "having", "do", "does", "did", "'re", "'m", "'ve", "'d", "'s"};
  return aux.count(w) != 0 || is_modal(w);
}

bool is_subject_pronoun(const std::string& w) {
  static const std::set<std::string> s = {"i", "you", "we", "they", "he", "she", "it"};
  return s.count(w) != 0;
}

bool is_possessive_pronoun(const std::string& w) {
  static const std::set<std::string> s = {"my", "your", "his", "her", "its", "our", "their"};
  return s.count(w) != 0;
}

// ---------------------------------------------------------------------------
// Tokenizer

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  const std::size_t n = s.size();
  std::size_t i = 0;
  auto emit = [&](std::size_t a, std::size_t b, TokenKind kind) {
    out.push_back(Token{std::string(s.substr(a, b - a)), Span{a, b}, kind});
  };
  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (is_ascii_space(c)) {
      ++i;
      continue;
    }
    std::size_t cl = 0;
    const char32_t cp = decode_at(s, i, cl);
    if (c >= 0x80 && is_unicode_space(cp)) {
      i += cl;
      continue;
    }
    // URLs are kept whole.
    if (starts_with_ci(s, i, "http://") || starts_with_ci(s, i, "https://") ||
        starts_with_ci(s, i, "www.")) {
      std::size_t j = i;
      while (j < n && !is_ascii_space(static_cast<unsigned char>(s[j]))) ++j;
      while (j > i && std::string_view(".,;:!?)\"'").find(s[j - 1]) != std::string_view::npos) --j;
      emit(i, j, TokenKind::unit);
      i = j;
      continue;
    }
    if (is_ascii_digit(c)) {
      std::size_t j = i;
      while (j < n && is_ascii_digit(static_cast<unsigned char>(s[j]))) ++j;
      while (j + 1 < n && (s[j] == '.' || s[j] == ',') &&
             is_ascii_digit(static_cast<unsigned char>(s[j + 1]))) {
        ++j;
        while (j < n && is_ascii_digit(static_cast<unsigned char>(s[j]))) ++j;
      }
      // Ordinals ("18th") and decades ("1700s") stay whole.
      if (j + 2 <= n && !is_letter_at(s, j + 2)) {
        const std::string suf = text::ascii_lower(s.substr(j, 2));
        if (suf == "st" || suf == "nd" || suf == "rd" || suf == "th") j += 2;
      }
      if (j < n && s[j] == 's' && !is_letter_at(s, j + 1)) ++j;
      emit(i, j, TokenKind::number);
      i = j;
      continue;
    }
    if (is_letter_at(s, i)) {
      std::size_t j = i;
      while (j < n) {
        if (is_alnum_at(s, j)) {
          std::size_t l = 0;
          decode_at(s, j, l);
          j += l;
          continue;
        }
        if (s[j] == '-' && is_alnum_at(s, j + 1)) {
          ++j;
          continue;
        }
        const std::size_t al = apostrophe_len(s, j);
        if (al > 0) {
          std::size_t k = j + al;
          while (k < n && is_ascii_alpha(static_cast<unsigned char>(s[k]))) ++k;
          const std::string rest = text::ascii_lower(s.substr(j + al, k - j - al));
          if (k < n && is_letter_at(s, k)) break;
          if (rest == "t" && j > i && (s[j - 1] == 'n' || s[j - 1] == 'N') && j - 1 > i) {
            emit(i, j - 1, TokenKind::word);
            emit(j - 1, k, TokenKind::word);
            i = k;
            j = std::string::npos;
            break;
          }
          if (rest == "s" || rest == "re" || rest == "ve" || rest == "ll" || rest == "d" ||
              rest == "m") {
            emit(i, j, TokenKind::word);
            emit(j, k, TokenKind::word);
            i = k;
            j = std::string::npos;
            break;
          }
          if (!rest.empty()) {
            j = k;  // o'clock, O'Brien
            continue;
          }
        }
        break;
      }
      if (j == std::string::npos) continue;
      emit(i, j, TokenKind::word);
      i = j;
      continue;
    }
    if (c == '-' && i + 1 < n && s[i + 1] == '-') {
      std::size_t j = i;
      while (j < n && s[j] == '-') ++j;
      emit(i, j, TokenKind::punctuation);
      i = j;
      continue;
    }
    if (c == '.' && s.substr(i, 3) == "...") {
      std::size_t j = i;
      while (j < n && s[j] == '.') ++j;
      emit(i, j, TokenKind::punctuation);
      i = j;
      continue;
    }
    if (cp == 0xB0 && i + cl < n) {
      const auto u = static_cast<unsigned char>(s[i + cl]);
      if ((u == 'C' || u == 'F' || u == 'K') && !is_letter_at(s, i + cl + 1)) {
        emit(i, i + cl + 1, TokenKind::symbol);
        i += cl + 1;
        continue;
      }
    }
    TokenKind kind = TokenKind::symbol;
    if (c < 0x80) {
      kind = ascii_punct(static_cast<char>(c)) ? TokenKind::punctuation : TokenKind::symbol;
    } else if (is_unicode_punct(cp)) {
      kind = TokenKind::punctuation;
    }
    emit(i, i + cl, kind);
    i += cl;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sentence splitting

namespace {

bool is_closer(const Token& t) {
  static const std::set<std::string> closers = {"\"", "'", ")", "]", "}", "\xE2\x80\x9D",
                                                "\xE2\x80\x99"};
  return t.kind == TokenKind::punctuation && closers.count(t.text) != 0;
}

bool is_bullet(const Token& t) {
  return t.text == "-" || t.text == "*" || t.text == "\xE2\x80\xA2" || t.text == "\xE2\x80\x93";
}

bool single_letter(const Token& t) {
  return t.kind == TokenKind::word && t.text.size() == 1 &&
         is_ascii_alpha(static_cast<unsigned char>(t.text[0]));
}

bool starts_lower(const Token& t) {
  return t.kind == TokenKind::word && !t.text.empty() && t.text[0] >= 'a' && t.text[0] <= 'z';
}

bool period_ends_sentence(const std::vector<Token>& toks, std::size_t k) {
  if (k + 1 >= toks.size()) return true;
  const Token& dot = toks[k];
  const Token& nx = toks[k + 1];
  const bool adjacent_next = nx.span.start == dot.span.end;
  if (k == 0) return true;
  const Token& prev = toks[k - 1];
  const bool adjacent_prev = prev.span.end == dot.span.start;
  const auto& wc = WordClasses::instance();
  if (adjacent_prev && prev.kind == TokenKind::word) {
    const std::string lp = text::ascii_lower(prev.text);
    if (wc.in("abbreviation", lp)) {
      return lp == "etc" && !adjacent_next && text::starts_with_upper(nx.text);
    }
    if (single_letter(prev)) {
      // "U.S." / "e.g." style initialisms.
      if (adjacent_next && single_letter(nx) && k + 2 < toks.size() && toks[k + 2].text == ".") {
        return false;
      }
      const bool inner = k >= 2 && toks[k - 2].text == "." &&
                         toks[k - 2].span.end == prev.span.start;
      if (inner && (starts_lower(nx) || nx.kind == TokenKind::number)) return false;
      if (starts_lower(nx)) return false;
    }
  }
  if (is_closer(nx)) return true;
  if (!adjacent_next) return true;
  if (nx.kind == TokenKind::word) {
    if (text::starts_with_upper(nx.text)) return true;
    if (starts_lower(nx)) {
      return prev.kind == TokenKind::word && prev.text.size() >= 3 &&
             nx.text.size() >= 2;
    }
  }
  return false;
}

}  // namespace

std::vector<Sentence> split_sentences(std::string_view s) {
  const auto toks = tokenize(s);
  std::vector<Sentence> out;
  if (toks.empty()) return out;
  std::size_t first = 0;
  auto close = [&](std::size_t last) {
    const Span sp{toks[first].span.start, toks[last].span.end};
    out.push_back(Sentence{std::string(s.substr(sp.start, sp.size())), sp});
    first = last + 1;
  };
  for (std::size_t k = 0; k < toks.size(); ++k) {
    if (k > first) {
      const auto gap = s.substr(toks[k - 1].span.end, toks[k].span.start - toks[k - 1].span.end);
      const auto nl = static_cast<std::size_t>(std::count(gap.begin(), gap.end(), '\n'));
      if (nl >= 2 || (nl == 1 && (text::starts_with_upper(toks[k].text) || is_bullet(toks[k]) ||
                                  toks[k].kind == TokenKind::number || toks[k].text == "*"))) {
        close(k - 1);
      }
    }
    const Token& t = toks[k];
    bool boundary = false;
    if (t.kind == TokenKind::punctuation && (t.text == "!" || t.text == "?")) {
      boundary = true;
    } else if (t.kind == TokenKind::punctuation && t.text == ".") {
      boundary = period_ends_sentence(toks, k);
    }
    if (!boundary) continue;
    std::size_t last = k;
    while (last + 1 < toks.size() && toks[last + 1].span.start == toks[last].span.end &&
           (is_closer(toks[last + 1]) || toks[last + 1].text == "!" || toks[last + 1].text == "?" ||
            toks[last + 1].text == ".")) {
      ++last;
    }
    close(last);
    k = last;
  }
  if (first < toks.size()) close(toks.size() - 1);
  return out;
}

// ---------------------------------------------------------------------------
// Lemmatizer

namespace {

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool ends_with(const std::string& w, std::string_view suf) {
  return w.size() >= suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0;
}

std::string noun_base(const std::string& w) {
  const auto& lex = Lexicon::instance();
  if (w.size() <= 3) return w;
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return w;
  std::string cand;
  if (ends_with(w, "ies")) {
    cand = w.substr(0, w.size() - 3) + "y";
  } else if (ends_with(w, "sses") || ends_with(w, "shes") || ends_with(w, "ches") ||
             ends_with(w, "xes") || ends_with(w, "zes")) {
    cand = w.substr(0, w.size() - 2);
  } else if (ends_with(w, "oes") && lex.known(w.substr(0, w.size() - 2))) {
    cand = w.substr(0, w.size() - 2);
  } else if (ends_with(w, "s")) {
    cand = w.substr(0, w.size() - 1);
  } else {
    return w;
  }
  if (lex.known(w) && !lex.known(cand) && !lex.has(w, Pos::verb)) return w;
  return cand;
}

std::string verb_base(const std::string& w) {
  const auto& lex = Lexicon::instance();
  if (w.size() <= 3) return w;
  auto undouble = [&](const std::string& b) -> std::string {
    if (b.size() >= 3 && b[b.size() - 1] == b[b.size() - 2] && !is_vowel(b.back()) &&
        b.back() != 'l' && b.back() != 's' && b.back() != 'z') {
      return b.substr(0, b.size() - 1);
    }
    return b;
  };
  auto pick = [&](const std::string& b) -> std::string {
    if (lex.known(b)) return b;
    if (lex.known(b + "e")) return b + "e";
    const std::string u = undouble(b);
    if (u != b && lex.known(u)) return u;
    if (u != b) return u;
    return b;
  };
  if (ends_with(w, "ied") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (ends_with(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (ends_with(w, "ed")) return pick(w.substr(0, w.size() - 2));
  if (ends_with(w, "ing") && w.size() > 5) return pick(w.substr(0, w.size() - 3));
  if (ends_with(w, "sses") || ends_with(w, "shes") || ends_with(w, "ches") ||
      ends_with(w, "xes") || ends_with(w, "zes") || ends_with(w, "oes")) {
    return w.substr(0, w.size() - 2);
  }
  if (ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is")) {
    return w.substr(0, w.size() - 1);
  }
  return w;
}

}  // namespace

std::string lemmatize(std::string_view word, Pos pos) {
  const std::string w = text::ascii_lower(word);
  const auto& lex = Lexicon::instance();
  if (w == "n't") return "not";
  if (w == "'s" || w == "'re" || w == "'m") return pos == Pos::verb ? "be" : w;
  if (w == "'ve") return "have";
  if (w == "'ll") return "will";
  const std::string irr = lex.irregular(w);
  if (!irr.empty()) return irr;
  switch (pos) {
    case Pos::noun:
    case Pos::proper_noun:
      return noun_base(w);
    case Pos::verb:
      return verb_base(w);
    default:
      return w;
  }
}

std::string normalize_np(std::string_view t) { return text::ascii_lower(text::collapse_whitespace(t)); }

// ---------------------------------------------------------------------------
// Tagger

namespace {

bool is_adverb_word(const std::string& w) {
  static const std::set<std::string> adv = {"most", "very", "more", "less", "highly", "quite",
                                            "too", "so", "extremely", "fairly", "rather", "also", "just",
                                            "only", "still", "even", "already", "often", "always",
                                            "never", "not", "n't", "then", "now", "usually"};
  return adv.count(w) != 0 || (w.size() > 4 && ends_with(w, "ly"));
}

std::vector<Pos> suffix_guess(const std::string& w) {
  if (w.size() > 4 && ends_with(w, "ly")) return {Pos::other};
  if (w.size() > 4 && (ends_with(w, "ing") || ends_with(w, "ed"))) return {Pos::verb};
  for (const char* suf : {"ous", "ful", "ive", "able", "ible", "al", "ic", "less", "ish"}) {
    if (w.size() > std::char_traits<char>::length(suf) + 2 && ends_with(w, suf)) {
      return {Pos::adjective};
    }
  }
  return {Pos::noun};
}

std::vector<Pos> candidates(const std::vector<Token>& toks, std::size_t i, bool sentence_initial) {
  const Token& t = toks[i];
  if (t.kind == TokenKind::number) return {Pos::other};
  if (t.kind == TokenKind::unit) return {Pos::proper_noun};
  if (t.kind != TokenKind::word) return {Pos::other};
  const auto& lex = Lexicon::instance();
  std::string w = text::replace_all(text::ascii_lower(t.text), "\xE2\x80\x99", "'");
  if (w == "n't") return {Pos::other};
  if (w == "'s") {
    static const std::set<std::string> hosts = {"it", "he", "she", "that", "there", "what",
                                                "who", "here", "where", "how"};
    if (i > 0 && hosts.count(text::ascii_lower(toks[i - 1].text)) != 0) return {Pos::verb};
    return {Pos::other};
  }
  if (w == "'re" || w == "'ve" || w == "'ll" || w == "'d" || w == "'m") return {Pos::verb};

  const bool upper = text::starts_with_upper(t.text);
  const bool all_caps = t.text.size() >= 2 && text::is_all_upper(t.text);
  std::vector<Pos> tags = lex.tags(w);
  // Plural nouns are not listed; "benefits" may only be listed as a verb form.
  if (!tags.empty() && ends_with(w, "s") && std::find(tags.begin(), tags.end(), Pos::noun) == tags.end()) {
    const std::string base = noun_base(w);
    if (base != w && lex.has(base, Pos::noun)) tags.insert(tags.begin(), Pos::noun);
  }
  if (!tags.empty()) {
    if (all_caps) {
      const Pos p = tags.front();
      if (p == Pos::noun || p == Pos::verb || p == Pos::adjective) return {Pos::proper_noun};
    }
    return tags;
  }
  if (all_caps) return {Pos::proper_noun};
  if (WordClasses::instance().number_value(w) >= 0) return {Pos::other};
  bool has_digit = false;
  for (const char ch : t.text) has_digit |= is_ascii_digit(static_cast<unsigned char>(ch));
  if (has_digit) return {upper ? Pos::proper_noun : Pos::noun};
  // Inflected forms of listed words.
  if (ends_with(w, "s")) {
    const std::string nb = noun_base(w);
    if (nb != w && lex.known(nb)) {
      std::vector<Pos> r;
      if (lex.has(nb, Pos::noun)) r.push_back(Pos::noun);
      const std::string vb = verb_base(w);
      if (lex.has(vb, Pos::verb)) r.push_back(Pos::verb);
      if (!r.empty()) return r;
    }
  }
  if (ends_with(w, "ed") || ends_with(w, "ing")) {
    const std::string vb = verb_base(w);
    if (lex.has(vb, Pos::verb)) return {Pos::verb};
  }
  if (upper && !sentence_initial) return {Pos::proper_noun};
  return suffix_guess(w);
}

bool has(const std::vector<Pos>& c, Pos p) { return std::find(c.begin(), c.end(), p) != c.end(); }

bool nominal(Pos p) { return p == Pos::noun || p == Pos::proper_noun; }

}  // namespace

std::vector<TaggedToken> pos_tag(const std::vector<Token>& toks) {
  const std::size_t n = toks.size();
  std::vector<std::vector<Pos>> cand(n);
  std::vector<bool> initial(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    bool init = i == 0;
    if (i > 0) {
      const Token& p = toks[i - 1];
      if (p.kind == TokenKind::punctuation &&
          (p.text == "." || p.text == "!" || p.text == "?" || p.text == ":" || p.text == "--" ||
           p.text == "\"" || p.text == "\xE2\x80\x9C")) {
        init = true;
      }
    }
    initial[i] = init;
    cand[i] = candidates(toks, i, init);
  }
  std::vector<Pos> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[i] = cand[i].front();

  auto lower = [&](std::size_t i) {
    return text::replace_all(text::ascii_lower(toks[i].text), "\xE2\x80\x99", "'");
  };
  auto is_adverb = [&](std::size_t i) {
    return pos[i] == Pos::other && toks[i].kind == TokenKind::word && is_adverb_word(lower(i));
  };
  auto is_num = [&](std::size_t i) {
    return toks[i].kind == TokenKind::number ||
           WordClasses::instance().number_value(lower(i)) >= 0;
  };
  auto verb_before = [&](std::size_t i) {
    for (std::size_t k = i; k > 0 && !initial[k]; --k) {
      if (pos[k - 1] == Pos::verb) return true;
      if (toks[k - 1].kind == TokenKind::punctuation && toks[k - 1].text == ",") return true;
    }
    return false;
  };
  auto boundary_after = [&](std::size_t i) {  // true when token i+1 is absent or punctuation
    return i + 1 >= n || toks[i + 1].kind == TokenKind::punctuation;
  };

  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = cand[i];
      const bool has_prev = i > 0 && !initial[i];
      const Pos prev = has_prev ? pos[i - 1] : Pos::other;
      const std::string prev_w = has_prev ? lower(i - 1) : std::string();
      const bool has_next = i + 1 < n;
      const Pos next = has_next ? pos[i + 1] : Pos::other;

      if (c.size() > 1 && has(c, Pos::determiner)) {
        if (has_next && (nominal(next) || next == Pos::adjective || is_num(i + 1)) &&
            !has(cand[i + 1], Pos::determiner)) {
          pos[i] = Pos::determiner;
        } else if (has(c, Pos::conjunction) && has_prev &&
                   (prev == Pos::verb || nominal(prev) || prev == Pos::other)) {
          pos[i] = Pos::conjunction;
        } else if (has(c, Pos::pronoun)) {
          pos[i] = Pos::pronoun;
        } else {
          pos[i] = c.front();
        }
        continue;
      }

      if (has(c, Pos::noun) && has(c, Pos::verb)) {
        std::size_t back = i;
        while (back > 0 && !initial[back] && is_adverb(back - 1)) --back;
        bool subj_before = back > 0 && !initial[back] &&
                           (nominal(pos[back - 1]) || (pos[back - 1] == Pos::pronoun &&
                                                       is_subject_pronoun(lower(back - 1))));
        if (subj_before && nominal(pos[back - 1])) {
          // A noun that is itself the object of a preposition is not a subject.
          std::size_t r = back - 1;
          while (r > 0 && !initial[r] &&
                 (nominal(pos[r - 1]) || pos[r - 1] == Pos::adjective ||
                  pos[r - 1] == Pos::determiner)) {
            --r;
          }
          if (r > 0 && !initial[r] && pos[r - 1] == Pos::preposition) subj_before = false;
        }
        const bool next_clausal = !has_next || boundary_after(i) ||
                                  next == Pos::determiner || next == Pos::preposition ||
                                  next == Pos::other || next == Pos::pronoun || is_num(i + 1);
        if (has_prev && (prev == Pos::determiner || prev == Pos::adjective || is_num(i - 1) ||
                         is_possessive_pronoun(prev_w) || prev_w == "'s")) {
          pos[i] = Pos::noun;
        } else if (has_prev && prev_w == "to" && prev == Pos::preposition) {
          pos[i] = Pos::verb;
        } else if (back > 0 && !initial[back] &&
                   ((pos[back - 1] == Pos::verb && is_auxiliary(lower(back - 1))) ||
                    lower(back - 1) == "n't" ||
                    (pos[back - 1] == Pos::pronoun && is_subject_pronoun(lower(back - 1))))) {
          pos[i] = Pos::verb;
        } else if (initial[i] && has_next &&
                   (next == Pos::determiner || next == Pos::pronoun || next == Pos::preposition ||
                    next == Pos::other || is_num(i + 1))) {
          pos[i] = Pos::verb;
        } else if (subj_before && next_clausal && i > 0 && !(prev == Pos::preposition)) {
          pos[i] = Pos::verb;
        } else if (subj_before && nominal(pos[back - 1]) && ends_with(lower(i), "s") && has_next &&
                   (next == Pos::adjective || nominal(next)) && !verb_before(i)) {
          // "the sensor measures relative humidity": the first finite verb of its clause.
          pos[i] = Pos::verb;
        } else {
          pos[i] = c.front() == Pos::adjective ? Pos::adjective : Pos::noun;
        }
        continue;
      }

      if (has(c, Pos::adjective) && has(c, Pos::noun)) {
        // Adjective when the run ahead reaches a noun before leaving the phrase.
        bool reaches_noun = false;
        for (std::size_t k = i + 1; k < n; ++k) {
          const std::string w = lower(k);
          if (w == "and" || w == "or" || w == "," || is_adverb(k)) continue;
          if (has(cand[k], Pos::adjective) && has(cand[k], Pos::noun)) {
            if (k + 1 < n && (lower(k + 1) == "and" || lower(k + 1) == "or" || lower(k + 1) == ",")) {
              continue;
            }
            reaches_noun = true;
            break;
          }
          reaches_noun = nominal(pos[k]) || is_num(k);
          if (pos[k] == Pos::adjective) continue;
          break;
        }
        pos[i] = reaches_noun ? Pos::adjective : Pos::noun;
        continue;
      }

      if (has(c, Pos::adjective) && has(c, Pos::verb)) {
        const bool next_noun = has_next && nominal(next);
        const bool opener = !has_prev || prev == Pos::determiner || prev == Pos::adjective ||
                            prev == Pos::verb || prev == Pos::preposition ||
                            prev == Pos::conjunction || toks[i - 1].kind == TokenKind::punctuation;
        pos[i] = (next_noun && opener) ? Pos::adjective : Pos::verb;
        if (!next_noun && has_prev && prev == Pos::verb && is_auxiliary(prev_w) &&
            c.front() == Pos::adjective) {
          pos[i] = Pos::adjective;
        }
        continue;
      }

      if (c.size() == 1 && c.front() == Pos::verb && ends_with(lower(i), "ed") && has_prev &&
          prev == Pos::determiner && has_next && nominal(next)) {
        pos[i] = Pos::adjective;
        continue;
      }

      if (c.size() > 1) pos[i] = c.front();
    }
  }

  std::vector<TaggedToken> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(TaggedToken{toks[i], pos[i]});
  return out;
}

std::vector<TaggedToken> tag_text(std::string_view text) { return pos_tag(tokenize(text)); }

// ---------------------------------------------------------------------------
// Chunker

namespace {

struct RawNp {
  std::size_t first;  // first token (determiner included)
  std::size_t mod_start;
  std::size_t head;   // head token index (inclusive end)
  std::vector<std::size_t> seps;  // coordination separator token indices
};

bool np_word(const std::vector<TaggedToken>& tt, std::size_t k) {
  const Pos p = tt[k].pos;
  if (p == Pos::noun || p == Pos::proper_noun || p == Pos::adjective) return true;
  if (tt[k].token.kind == TokenKind::number) return true;
  return WordClasses::instance().number_value(text::ascii_lower(tt[k].token.text)) >= 0;
}

bool adverb_tok(const std::vector<TaggedToken>& tt, std::size_t k) {
  return tt[k].pos == Pos::other && tt[k].token.kind == TokenKind::word &&
         is_adverb_word(text::ascii_lower(tt[k].token.text));
}

bool adjective_start(const std::vector<TaggedToken>& tt, std::size_t k) {
  while (k < tt.size() && adverb_tok(tt, k)) ++k;
  return k < tt.size() && tt[k].pos == Pos::adjective;
}

std::string slice(std::string_view text, std::size_t a, std::size_t b) {
  return std::string(text.substr(a, b - a));
}

}  // namespace

std::vector<NounPhrase> chunk(std::string_view text, const std::vector<TaggedToken>& tt) {
  const std::size_t n = tt.size();
  std::vector<RawNp> raws;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    const std::string w0 = text::ascii_lower(tt[i].token.text);
    const bool det = tt[i].pos == Pos::determiner ||
                     (tt[i].pos == Pos::pronoun && is_possessive_pronoun(w0));
    if (det) ++j;
    const std::size_t mod_start = j;
    std::vector<std::size_t> seps;
    std::size_t k = j;
    std::size_t last_nominal = std::string::npos;
    while (k < n) {
      if (np_word(tt, k)) {
        if (tt[k].pos == Pos::noun || tt[k].pos == Pos::proper_noun) last_nominal = k;
        ++k;
        continue;
      }
      if (adverb_tok(tt, k) && adjective_start(tt, k + 1) && k + 1 < n) {
        ++k;
        continue;
      }
      const std::string w = tt[k].token.text;
      if ((w == "and" || w == "or" || w == ",") && k > mod_start && tt[k - 1].pos == Pos::adjective) {
        std::size_t after = k + 1;
        if (w == "," && after < n && (tt[after].token.text == "and" || tt[after].token.text == "or")) {
          ++after;
        }
        if (after < n && adjective_start(tt, after)) {
          // The coordinated run must continue to a head noun.
          std::size_t look = after;
          while (look < n) {
            const std::string lw = tt[look].token.text;
            if (np_word(tt, look) || adverb_tok(tt, look)) {
              ++look;
            } else if ((lw == "and" || lw == "or" || lw == ",") && look + 1 < n &&
                       adjective_start(tt, look + 1)) {
              ++look;
            } else {
              break;
            }
          }
          bool noun_after = false;
          for (std::size_t q = after; q < look; ++q) {
            noun_after |= tt[q].pos == Pos::noun || tt[q].pos == Pos::proper_noun;
          }
          if (noun_after) {
            for (std::size_t q = k; q < after; ++q) seps.push_back(q);
            k = after;
            continue;
          }
        }
      }
      break;
    }
    if (last_nominal == std::string::npos) {
      i = std::max(i + 1, det ? j : i + 1);
      continue;
    }
    while (!seps.empty() && seps.back() > last_nominal) seps.pop_back();
    raws.push_back(RawNp{i, mod_start, last_nominal, seps});
    i = last_nominal + 1;
  }

  std::vector<NounPhrase> base;
  for (const auto& r : raws) {
    NounPhrase np;
    np.span = Span{tt[r.first].token.span.start, tt[r.head].token.span.end};
    np.text = slice(text, np.span.start, np.span.end);
    const Pos hp = tt[r.head].pos;
    np.head = lemmatize(tt[r.head].token.text, hp == Pos::proper_noun ? Pos::noun : hp);
    if (r.first != r.mod_start) np.determiner = tt[r.first].token.text;
    for (std::size_t k = r.mod_start; k < r.head; ++k) {
      if (std::find(r.seps.begin(), r.seps.end(), k) != r.seps.end()) continue;
      if (adverb_tok(tt, k)) continue;
      np.modifiers.push_back(tt[k].token.text);
    }
    for (std::size_t k = r.first; k <= r.head; ++k) np.proper |= tt[k].pos == Pos::proper_noun;
    if (!r.seps.empty()) {
      // Group the separators; each conjunct is adverbs* + adjective adjacent to a separator.
      std::vector<std::pair<std::size_t, std::size_t>> groups;
      for (const auto s : r.seps) {
        if (!groups.empty() && groups.back().second + 1 == s) {
          groups.back().second = s;
        } else {
          groups.emplace_back(s, s);
        }
      }
      std::vector<std::pair<std::size_t, std::size_t>> conj;
      std::size_t c1 = groups.front().first - 1;
      while (c1 > r.mod_start && adverb_tok(tt, c1 - 1)) --c1;
      conj.emplace_back(c1, groups.front().first - 1);
      for (std::size_t g = 0; g < groups.size(); ++g) {
        const std::size_t a = groups[g].second + 1;
        std::size_t b = a;
        if (g + 1 < groups.size()) {
          b = groups[g + 1].first - 1;
        } else {
          while (b < r.head && adverb_tok(tt, b)) ++b;
        }
        conj.emplace_back(a, b);
      }
      for (const auto& [a, b] : conj) {
        np.conjuncts.push_back(slice(text, tt[a].token.span.start, tt[b].token.span.end));
      }
      const std::size_t last_end = tt[conj.back().second].token.span.end;
      np.tail = text::trim(slice(text, last_end, np.span.end));
      const std::size_t lead_start = tt[r.mod_start].token.span.start;
      np.lead = text::trim(slice(text, lead_start, tt[conj.front().first].token.span.start));
      np.coordination = Span{lead_start, np.span.end};
    }
    base.push_back(std::move(np));
  }

  // Container phrases: "X of Y" and "Y's X".
  std::vector<NounPhrase> out = base;
  auto token_at = [&](std::size_t byte) -> std::size_t {
    for (std::size_t k = 0; k < n; ++k) {
      if (tt[k].token.span.start == byte) return k;
    }
    return n;
  };
  for (std::size_t a = 0; a + 1 < base.size(); ++a) {
    std::size_t endk = n;
    for (std::size_t k = 0; k < n; ++k) {
      if (tt[k].token.span.end == base[a].span.end) {
        endk = k;
        break;
      }
    }
    if (endk + 1 >= n) continue;
    const std::string link = text::replace_all(tt[endk + 1].token.text, "\xE2\x80\x99", "'");
    const auto& b = base[a + 1];
    const std::size_t b_first = token_at(b.span.start);
    if (b_first != endk + 2) continue;
    NounPhrase c;
    if (text::ascii_lower(link) == "of") {
      c = base[a];
      c.conjuncts.clear();
      c.tail.clear();
      c.lead.clear();
      c.coordination = Span{};
      c.complement_head = b.head;
    } else if (link == "'s") {
      c = b;
      c.conjuncts.clear();
      c.tail.clear();
      c.lead.clear();
      c.coordination = Span{};
      c.determiner.clear();
      c.complement_head = base[a].head;
      c.proper = b.proper;
    } else {
      continue;
    }
    c.container = true;
    c.span = Span{base[a].span.start, b.span.end};
    c.text = slice(text, c.span.start, c.span.end);
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(), [](const NounPhrase& x, const NounPhrase& y) {
    if (x.span.start != y.span.start) return x.span.start < y.span.start;
    if (x.container != y.container) return !x.container;
    return x.span.end < y.span.end;
  });
  return out;
}

std::vector<NounPhrase> extract_noun_phrases(std::string_view text) {
  return chunk(text, tag_text(text));
}

std::vector<NounPhrase> expand_coordination(const NounPhrase& np) {
  if (np.conjuncts.empty()) return {np};
  std::vector<NounPhrase> out;
  for (const auto& c : np.conjuncts) {
    NounPhrase e = np;
    std::string t;
    if (!np.lead.empty()) t += np.lead + " ";
    t += c;
    if (!np.tail.empty()) t += " " + np.tail;
    e.text = t;
    e.synthetic = true;
    e.determiner.clear();
    e.conjuncts.clear();
    e.lead.clear();
    e.tail.clear();
    e.modifiers.clear();
    const auto words = text::split(text::collapse_whitespace(t), ' ');
    for (std::size_t k = 0; k + 1 < words.size(); ++k) e.modifiers.push_back(words[k]);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<Coordination> find_coordinations(std::string_view text) {
  const auto tt = tag_text(text);
  const auto nps = chunk(text, tt);
  std::vector<Coordination> out;
  std::vector<const NounPhrase*> base;
  for (const auto& np : nps) {
    if (np.container) continue;
    base.push_back(&np);
    if (!np.conjuncts.empty()) {
      Coordination c;
      c.kind = Coordination::Kind::modifier;
      c.span = np.coordination;
      for (const auto& e : expand_coordination(np)) {
        c.conjuncts.push_back(e.text);
        c.conjunct_spans.push_back(np.coordination);
      }
      out.push_back(std::move(c));
    }
  }
  // Phrase-level chains: NP (sep NP)+ where separators are "," / "and" / "or".
  auto between = [&](std::size_t a, std::size_t b) {
    std::vector<std::string> words;
    for (const auto& t : tt) {
      if (t.token.span.start >= a && t.token.span.end <= b) words.push_back(text::ascii_lower(t.token.text));
    }
    return words;
  };
  std::size_t k = 0;
  while (k < base.size()) {
    std::size_t e = k;
    bool has_conj = false;
    while (e + 1 < base.size()) {
      const auto words = between(base[e]->span.end, base[e + 1]->span.start);
      const bool ok = (words.size() == 1 && (words[0] == "and" || words[0] == "or" || words[0] == ",")) ||
                      (words.size() == 2 && words[0] == "," && (words[1] == "and" || words[1] == "or"));
      if (!ok) break;
      has_conj |= words.back() == "and" || words.back() == "or";
      ++e;
    }
    if (e > k && has_conj) {
      Coordination c;
      c.kind = Coordination::Kind::phrase;
      c.span = Span{base[k]->span.start, base[e]->span.end};
      for (std::size_t q = k; q <= e; ++q) {
        c.conjuncts.push_back(base[q]->text);
        c.conjunct_spans.push_back(base[q]->span);
      }
      out.push_back(std::move(c));
    }
    k = e + 1;
  }
  std::stable_sort(out.begin(), out.end(), [](const Coordination& a, const Coordination& b) {
    return a.span.start < b.span.start;
  });
  return out;
}

}  // namespace acurai::nlp
