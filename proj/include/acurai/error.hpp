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

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace acurai {

enum class ErrorKind {
  invalid_input,
  provider,
  network,
  auth,
  rate_limited,
  timeout,
  malformed_response,
  missing_fixture,
  slot_not_found,
  io,
  parse,
  empty_dataset,
  llm_unavailable,
  config,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. The kind is stable
/// and is what callers (CLI exit codes, gateway status codes) dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by embedding providers. Carries the batch that failed and how many
/// attempts were made, so callers can retry or report precisely.
class ProviderError : public Error {
 public:
  ProviderError(ErrorKind kind, const std::string& message,
                std::vector<std::string> failed_batch, int attempts)
      : Error(kind, message),
        failed_batch_(std::move(failed_batch)),
        attempts_(attempts) {}

  const std::vector<std::string>& failed_batch() const noexcept { return failed_batch_; }
  int attempts() const noexcept { return attempts_; }

 private:
  std::vector<std::string> failed_batch_;
  int attempts_;
};

/// Raised by chat clients.
class LlmError : public Error {
 public:
  LlmError(ErrorKind kind, const std::string& message,
           std::optional<std::chrono::seconds> retry_after = std::nullopt)
      : Error(kind, message), retry_after_(retry_after) {}

  std::optional<std::chrono::seconds> retry_after() const noexcept { return retry_after_; }

 private:
  std::optional<std::chrono::seconds> retry_after_;
};

}  // namespace acurai
