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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace acurai::text {

/// Byte length of the UTF-8 sequence introduced by `lead` (1 for invalid leads).
std::size_t utf8_length(unsigned char lead) noexcept;

/// Decodes the literal escape forms that scraped corpora carry: "\uXXXX"
/// (including surrogate pairs) and backslash-escaped punctuation such as "\^".
std::string decode_escapes(std::string_view in);

std::string ascii_lower(std::string_view in);
std::string trim(std::string_view in);
/// Trims and collapses every whitespace run to a single space.
std::string collapse_whitespace(std::string_view in);

std::vector<std::string> split(std::string_view in, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string replace_all(std::string in, std::string_view from, std::string_view to);

bool starts_with_upper(std::string_view word) noexcept;
bool is_all_upper(std::string_view word) noexcept;
std::string capitalize_first(std::string_view in);

std::uint64_t fnv1a64(std::string_view in) noexcept;
std::string sha256_hex(std::string_view in);

}  // namespace acurai::text
