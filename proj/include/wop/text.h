// Copyright 2026 The wop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small string helpers shared across modules.

#ifndef WOP_TEXT_H_
#define WOP_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace wop {

std::string_view Trim(std::string_view s);

// Splits on ASCII whitespace, dropping empty pieces.
std::vector<std::string> SplitWhitespace(std::string_view s);

std::string Join(const std::vector<std::string>& parts, std::string_view sep);

std::string ToLower(std::string_view s);

// Lowercases and strips leading/trailing ASCII punctuation, so "Good." and
// "good" compare equal. May return an empty string.
std::string NormalizeWord(std::string_view token);

// Shortest decimal representation that round-trips to the same double.
std::string FormatDouble(double v);

// Fixed-point with the given number of decimals.
std::string FormatFixed(double v, int decimals);

}  // namespace wop

#endif  // WOP_TEXT_H_
