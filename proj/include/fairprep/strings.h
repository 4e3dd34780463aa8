// Copyright 2026 The fairprep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef FAIRPREP_STRINGS_H_
#define FAIRPREP_STRINGS_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fairprep {

std::vector<std::string_view> Split(std::string_view text, char sep);
std::string_view Trim(std::string_view text);
std::string Join(const std::vector<std::string>& parts, std::string_view sep);

// Whole-string numeric parse; surrounding whitespace is not accepted.
std::optional<double> ParseDouble(std::string_view text);
std::optional<long long> ParseInt(std::string_view text);

// Shortest representation that parses back to the same double.
std::string FormatDouble(double value);

}  // namespace fairprep

#endif  // FAIRPREP_STRINGS_H_
