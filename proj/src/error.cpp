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

#include "acurai/error.hpp"

namespace acurai {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::provider: return "provider-error";
    case ErrorKind::network: return "network-error";
    case ErrorKind::auth: return "auth-error";
    case ErrorKind::rate_limited: return "rate-limit-exhausted";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::malformed_response: return "malformed-response";
    case ErrorKind::missing_fixture: return "missing-fixture";
    case ErrorKind::slot_not_found: return "slot-not-found";
    case ErrorKind::io: return "io-error";
    case ErrorKind::parse: return "parse-error";
    case ErrorKind::empty_dataset: return "zero-valid-records";
    case ErrorKind::llm_unavailable: return "llm-unavailable";
    case ErrorKind::config: return "config-error";
  }
  return "unknown";
}

}  // namespace acurai
