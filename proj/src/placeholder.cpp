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

#include "acurai/placeholder.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <regex>

#include "acurai/collision.hpp"
#include "acurai/error.hpp"

namespace acurai {

const char* to_string(PlaceholderKind k) noexcept {
  switch (k) {
    case PlaceholderKind::entity_rename: return "entity-rename";
    case PlaceholderKind::reference: return "reference";
    case PlaceholderKind::id: return "id";
    case PlaceholderKind::citation: return "citation";
  }
  return "id";
}

PlaceholderKind placeholder_kind_from_string(const std::string& s) {
  if (s == "entity-rename") return PlaceholderKind::entity_rename;
  if (s == "reference") return PlaceholderKind::reference;
  if (s == "id") return PlaceholderKind::id;
  if (s == "citation") return PlaceholderKind::citation;
  throw Error(ErrorKind::invalid_input, "unknown placeholder kind: " + s);
}

std::string placeholder_name(std::size_t k, const std::string& prefix) {
  std::size_t n = k + 2;
  std::string letters;
  while (n > 0) {
    --n;
    letters.push_back(static_cast<char>('A' + n % 26));
    n /= 26;
  }
  std::reverse(letters.begin(), letters.end());
  return prefix + letters;
}

PlaceholderTable::PlaceholderTable(std::string id, std::string prefix)
    : id_(std::move(id)), prefix_(std::move(prefix)) {
  if (prefix_.empty()) throw Error(ErrorKind::invalid_input, "placeholder prefix must not be empty");
}

std::string PlaceholderTable::acquire(const std::string& original, PlaceholderKind kind) {
  if (const auto it = by_original_.find(original); it != by_original_.end()) {
    return entries_[it->second].placeholder;
  }
  const std::string ph = placeholder_name(entries_.size(), prefix_);
  by_original_[original] = entries_.size();
  by_placeholder_[ph] = entries_.size();
  entries_.push_back(PlaceholderEntry{ph, original, kind});
  return ph;
}

std::optional<std::string> PlaceholderTable::original_of(const std::string& placeholder) const {
  const auto it = by_placeholder_.find(placeholder);
  if (it == by_placeholder_.end()) return std::nullopt;
  return entries_[it->second].original;
}

std::optional<std::string> PlaceholderTable::placeholder_of(const std::string& original) const {
  const auto it = by_original_.find(original);
  if (it == by_original_.end()) return std::nullopt;
  return entries_[it->second].placeholder;
}

bool PlaceholderTable::is_bijective() const {
  std::map<std::string, int> ph;
  std::map<std::string, int> orig;
  const std::regex shape(prefix_ + "[A-Z]+");
  for (const auto& e : entries_) {
    if (++ph[e.placeholder] > 1 || ++orig[e.original] > 1) return false;
    if (!std::regex_match(e.placeholder, shape)) return false;
  }
  return true;
}

std::vector<ProtectedSpan> detect_protected_spans(const std::string& text) {
  struct Pattern {
    std::regex re;
    int group;
    PlaceholderKind kind;
  };
  static const std::vector<Pattern> patterns = {
      {std::regex(R"(\[\d+(?:\s*[,\-]\s*\d+)*\])"), 0, PlaceholderKind::citation},
      {std::regex(R"((?:PMID|PubMed(?:\s+ID)?)\s*:?\s*(\d{7,8})(?![0-9]))", std::regex::icase), 1,
       PlaceholderKind::id},
      {std::regex(R"(\b10\.\d{4,9}/[^\s"<>]*[^\s"<>.,;:)\]])"), 0, PlaceholderKind::reference},
      {std::regex(R"(\b(?=[A-Za-z0-9-]*[0-9])(?=[A-Za-z0-9-]*[A-Z])[A-Za-z0-9]+(?:-[A-Za-z0-9]+)+\b)"), 0,
       PlaceholderKind::id},
  };
  std::vector<ProtectedSpan> found;
  for (const auto& p : patterns) {
    for (auto it = std::sregex_iterator(text.begin(), text.end(), p.re); it != std::sregex_iterator(); ++it) {
      const auto& m = *it;
      const auto start = static_cast<std::size_t>(m.position(p.group));
      found.push_back({{start, start + static_cast<std::size_t>(m.length(p.group))}, p.kind});
    }
  }
  for (const auto& pair : entity_common_noun_overlaps(nlp::extract_noun_phrases(text))) {
    // Every occurrence of the name, not only the one the chunker reported.
    const std::string name = text.substr(pair.left.span.start, pair.left.span.size());
    for (std::size_t pos = text.find(name); pos != std::string::npos; pos = text.find(name, pos + 1)) {
      found.push_back({{pos, pos + name.size()}, PlaceholderKind::entity_rename});
    }
  }
  std::sort(found.begin(), found.end(), [](const ProtectedSpan& a, const ProtectedSpan& b) {
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return a.span.size() > b.span.size();
  });
  std::vector<ProtectedSpan> out;
  for (const auto& s : found) {
    if (!out.empty() && out.back().span.overlaps(s.span)) continue;
    out.push_back(s);
  }
  return out;
}

std::string apply_placeholders(const std::string& text, const std::vector<ProtectedSpan>& spans,
                               PlaceholderTable& table) {
  std::vector<ProtectedSpan> sorted = spans;
  std::sort(sorted.begin(), sorted.end(),
            [](const ProtectedSpan& a, const ProtectedSpan& b) { return a.span.start < b.span.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& s = sorted[i].span;
    if (s.start >= s.end || s.end > text.size()) {
      throw Error(ErrorKind::invalid_input, "protected span [" + std::to_string(s.start) + ", " +
                                                std::to_string(s.end) + ") is out of bounds");
    }
    if (i > 0 && sorted[i - 1].span.overlaps(s)) throw Error(ErrorKind::invalid_input, "protected spans overlap");
  }
  std::vector<std::string> names;
  for (const auto& s : sorted) names.push_back(table.acquire(text.substr(s.span.start, s.span.size()), s.kind));
  std::string out = text;
  for (std::size_t i = sorted.size(); i-- > 0;) {
    out.replace(sorted[i].span.start, sorted[i].span.size(), names[i]);
  }
  return out;
}

std::size_t RemapReport::total() const noexcept {
  std::size_t n = 0;
  for (const auto& [k, v] : substitutions) n += v;
  return n;
}

std::pair<std::string, RemapReport> remap(const std::string& response, const PlaceholderTable& table) {
  const std::regex token("\\b" + table.prefix() + "[A-Z]+\\b");
  RemapReport report;
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(response.begin(), response.end(), token); it != std::sregex_iterator(); ++it) {
    const auto pos = static_cast<std::size_t>(it->position());
    const std::string ph = it->str();
    out.append(response, last, pos - last);
    if (const auto orig = table.original_of(ph)) {
      out += *orig;
      ++report.substitutions[ph];
    } else {
      out += ph;
      if (std::find(report.unknown.begin(), report.unknown.end(), ph) == report.unknown.end()) {
        report.unknown.push_back(ph);
      }
      report.degraded = true;
    }
    last = pos + ph.size();
  }
  out.append(response, last, std::string::npos);
  return {out, report};
}

nlohmann::json to_json(const PlaceholderTable& table) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : table.entries()) {
    entries.push_back({{"ph", e.placeholder}, {"orig", e.original}, {"kind", to_string(e.kind)}});
  }
  return {{"id", table.id()}, {"entries", entries}};
}

nlohmann::json to_json(const RemapReport& report) {
  return {{"substitutions", report.substitutions}, {"unknown", report.unknown}, {"degraded", report.degraded}};
}

}  // namespace acurai
