// Copyright (c) 2026 The CBA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CBA_UTIL_TEXT_HPP_
#define CBA_UTIL_TEXT_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace cba {

std::vector<std::string> split_words(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep = " ");
/// ASCII lowercasing; other bytes pass through.
std::string to_lower(std::string_view text);
std::string trim(std::string_view text);
/// Lowercase, collapse whitespace runs to one space, trim.
std::string normalize_phrase(std::string_view text);
/// Splits UTF-8 into code points; invalid lead bytes become one-byte units.
std::vector<std::string> utf8_chars(std::string_view text);
bool starts_with(std::string_view s, std::string_view prefix);
std::vector<std::string> split(std::string_view s, char delim);

/// Fixed-point decimal, identical across platforms for the same double.
std::string format_fixed(double v, int digits);

}  // namespace cba

#endif  // CBA_UTIL_TEXT_HPP_
