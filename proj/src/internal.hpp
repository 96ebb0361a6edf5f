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

// Helpers shared by the HTTP clients; not part of the public API.

#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <string>
#include <string_view>

namespace acurai::detail {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // begins with '/'
};

inline UrlParts split_url(std::string_view url) {
  const auto scheme = url.find("://");
  const std::size_t host_start = scheme == std::string_view::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', host_start);
  if (slash == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

/// Counting limiter for concurrent outbound requests.
class Limiter {
 public:
  explicit Limiter(std::ptrdiff_t limit) : limit_(limit) {}

  void set_limit(std::ptrdiff_t limit) {
    std::lock_guard<std::mutex> lk(mu_);
    limit_ = limit < 1 ? 1 : limit;
    cv_.notify_all();
  }

  void acquire() {
    std::unique_lock<std::mutex> lk(mu_);
    cv_.wait(lk, [&] { return used_ < limit_; });
    ++used_;
  }

  void release() {
    std::lock_guard<std::mutex> lk(mu_);
    --used_;
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::ptrdiff_t limit_;
  std::ptrdiff_t used_ = 0;
};

class LimiterGuard {
 public:
  explicit LimiterGuard(Limiter& l) : l_(l) { l_.acquire(); }
  ~LimiterGuard() { l_.release(); }
  LimiterGuard(const LimiterGuard&) = delete;
  LimiterGuard& operator=(const LimiterGuard&) = delete;

 private:
  Limiter& l_;
};

}  // namespace acurai::detail
