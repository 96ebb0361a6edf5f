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

#include <string_view>

// Bundled plain-text resources, compiled into the library from resources/.
namespace acurai::resources {

std::string_view lexicon();
std::string_view irregular();
std::string_view aliases();
std::string_view concepts();
std::string_view wordclasses();
std::string_view prompts();

}  // namespace acurai::resources
