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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "acurai/nlp.hpp"

namespace acurai {

enum class PlaceholderKind { entity_rename, reference, id, citation };
const char* to_string(PlaceholderKind k) noexcept;
PlaceholderKind placeholder_kind_from_string(const std::string& s);

struct ProtectedSpan {
  nlp::Span span;
  PlaceholderKind kind = PlaceholderKind::id;
};

struct PlaceholderEntry {
  std::string placeholder;
  std::string original;
  PlaceholderKind kind = PlaceholderKind::id;
};

/// k-th placeholder (0-based): prefix + bijective base-26 of k + 2, so the
/// sequence runs QQB, QQC, ..., QQZ, QQAA, QQAB, ...
std::string placeholder_name(std::size_t k, const std::string& prefix = "QQ");

class PlaceholderTable {
 public:
  explicit PlaceholderTable(std::string id = "placeholders", std::string prefix = "QQ");

  const std::string& id() const noexcept { return id_; }
  const std::string& prefix() const noexcept { return prefix_; }
  const std::vector<PlaceholderEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

  /// Placeholder for `original`, creating an entry if needed.
  std::string acquire(const std::string& original, PlaceholderKind kind);
  std::optional<std::string> original_of(const std::string& placeholder) const;
  std::optional<std::string> placeholder_of(const std::string& original) const;

  /// Placeholders and originals are unique and well-formed.
  bool is_bijective() const;

 private:
  std::string id_;
  std::string prefix_;
  std::vector<PlaceholderEntry> entries_;
  std::map<std::string, std::size_t> by_placeholder_;
  std::map<std::string, std::size_t> by_original_;
};

/// Bracketed citations, PubMed IDs, DOIs, part numbers and corporate names that
/// share a word with a common noun phrase in the same text. Non-overlapping;
/// the leftmost, then longest, candidate wins.
std::vector<ProtectedSpan> detect_protected_spans(const std::string& text);

/// Replaces spans right to left. Placeholders are numbered in reading order
/// and identical originals share one placeholder.
std::string apply_placeholders(const std::string& text, const std::vector<ProtectedSpan>& spans,
                               PlaceholderTable& table);

struct RemapReport {
  std::map<std::string, std::size_t> substitutions;  // placeholder -> count
  std::vector<std::string> unknown;                  // placeholder-like tokens not in the table
  bool degraded = false;

  std::size_t total() const noexcept;
};

std::pair<std::string, RemapReport> remap(const std::string& response, const PlaceholderTable& table);

nlohmann::json to_json(const PlaceholderTable& table);
nlohmann::json to_json(const RemapReport& report);

}  // namespace acurai
