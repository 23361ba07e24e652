// Copyright 2026 The floorloc Authors
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

#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "floorloc/errors.hpp"

namespace floorloc::detail {

/// Float with 9 significant digits, enough to round-trip binary32.
inline void append_float(std::string& out, float value) {
  char buf[32];
  auto [end, ec] =
      std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 9);
  out.append(buf, end);
}

/// Double with 17 significant digits, enough to round-trip binary64.
inline void append_double(std::string& out, double value) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value,
                                 std::chars_format::general, 17);
  out.append(buf, end);
}

/// Whitespace-separated fields; a line starting with '#' yields nothing.
inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' ||
                               line[i] == '\r' || line[i] == ',')) {
      ++i;
    }
    if (i == line.size()) break;
    if (out.empty() && line[i] == '#') break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' &&
           line[j] != '\r' && line[j] != ',') {
      ++j;
    }
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line_no, "invalid number '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace floorloc::detail
