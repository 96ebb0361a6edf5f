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

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace acurai::nlp {

/// Half-open byte range [start, end) into a UTF-8 source string.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - start; }
  bool contains(const Span& o) const noexcept { return start <= o.start && o.end <= end; }
  bool overlaps(const Span& o) const noexcept { return start < o.end && o.start < end; }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

enum class TokenKind { word, number, punctuation, symbol, unit };

struct Token {
  std::string text;
  Span span;
  TokenKind kind = TokenKind::word;
};

enum class Pos {
  noun,
  proper_noun,
  adjective,
  determiner,
  verb,
  pronoun,
  preposition,
  conjunction,
  other,
};

struct TaggedToken {
  Token token;
  Pos pos = Pos::other;
};

struct NounPhrase {
  std::string text;
  std::string head;  // lemma of the head noun
  Span span;
  std::vector<std::string> modifiers;

  std::string determiner;  // leading determiner or possessive pronoun, if any
  bool proper = false;     // head (or any token) is a proper noun
  bool synthetic = false;  // produced by expand_coordination; text is not a source substring
  // "X of Y" and "Y's X" yield an extra container phrase headed by X.
  bool container = false;
  std::string complement_head;
  // Coordinated modifiers ("chemical and physical properties").
  std::vector<std::string> conjuncts;
  Span coordination;  // from the first conjunct through the end of the phrase
  std::string tail;   // text after the last conjunct ("properties")
  std::string lead;   // modifiers between the determiner and the first conjunct
};

struct Coordination {
  enum class Kind { modifier, phrase };
  Kind kind = Kind::phrase;
  Span span;
  std::vector<std::string> conjuncts;
  std::vector<Span> conjunct_spans;
};

struct Sentence {
  std::string text;
  Span span;
};

const char* to_string(Pos pos) noexcept;
const char* to_string(TokenKind kind) noexcept;

/// Word lists loaded from the bundled lexicon and irregular-forms table.
class Lexicon {
 public:
  static const Lexicon& instance();
  Lexicon(std::string_view lexicon_tsv, std::string_view irregular_tsv);

  /// Tags for a lower-cased word, in preference order; empty if unknown.
  const std::vector<Pos>& tags(const std::string& lower) const;
  bool has(const std::string& lower, Pos pos) const;
  bool known(const std::string& lower) const { return entries_.count(lower) != 0; }
  /// Irregular base form, or empty.
  std::string irregular(const std::string& lower) const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::unordered_map<std::string, std::vector<Pos>> entries_;
  std::unordered_map<std::string, std::string> irregular_;
};

/// Closed word classes (anaphoric pronouns, support verbs, negators, ...).
class WordClasses {
 public:
  static const WordClasses& instance();
  explicit WordClasses(std::string_view tsv);

  bool in(std::string_view cls, const std::string& lower) const;
  const std::set<std::string>& members(std::string_view cls) const;
  /// Numeric value for number words, or -1.
  long long number_value(const std::string& lower) const;

 private:
  std::map<std::string, std::set<std::string>, std::less<>> classes_;
  std::unordered_map<std::string, long long> values_;
};

std::vector<Token> tokenize(std::string_view text);
std::vector<Sentence> split_sentences(std::string_view text);
std::vector<TaggedToken> pos_tag(const std::vector<Token>& tokens);
/// Convenience: tokenize + pos_tag.
std::vector<TaggedToken> tag_text(std::string_view text);

std::vector<NounPhrase> extract_noun_phrases(std::string_view text);
/// Same, over an already tagged sequence whose spans index `text`.
std::vector<NounPhrase> chunk(std::string_view text, const std::vector<TaggedToken>& tagged);
std::vector<NounPhrase> expand_coordination(const NounPhrase& np);
std::vector<Coordination> find_coordinations(std::string_view text);

std::string lemmatize(std::string_view word, Pos pos);
/// Lower-cased, whitespace-collapsed form used for NP identity.
std::string normalize_np(std::string_view text);

bool is_auxiliary(const std::string& lower);
bool is_modal(const std::string& lower);
bool is_subject_pronoun(const std::string& lower);
bool is_possessive_pronoun(const std::string& lower);

}  // namespace acurai::nlp
