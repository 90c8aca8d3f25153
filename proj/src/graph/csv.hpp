// Copyright 2026 The fgvasp Authors
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
//

// Minimal CSV helpers shared by the loaders. Internal header.

#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fgv::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Splits on `sep`, honouring double quotes ("" escapes a quote). Without
/// quotes the fields are views into `line`; otherwise they view `scratch`.
inline void split(std::string_view line, char sep, std::vector<std::string_view>& out,
                  std::vector<std::string>& scratch) {
  out.clear();
  if (line.find('"') == std::string_view::npos) {
    std::size_t i = 0;
    while (true) {
      const std::size_t next = line.find(sep, i);
      if (next == std::string_view::npos) {
        out.push_back(trim(line.substr(i)));
        return;
      }
      out.push_back(trim(line.substr(i, next - i)));
      i = next + 1;
    }
  }
  scratch.clear();
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == sep) {
      scratch.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  scratch.push_back(std::move(field));
  for (const std::string& f : scratch) out.push_back(trim(f));
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

/// Line reader that tracks 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::ifstream& in) : in_(in) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  std::size_t line_no() const { return line_no_; }

 private:
  std::ifstream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace fgv::csv
