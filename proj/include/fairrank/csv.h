// Copyright 2026 The Fairrank Authors
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

#ifndef FAIRRANK_CSV_H_
#define FAIRRANK_CSV_H_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fairrank/internal/strings.h"
#include "fmt/format.h"

namespace fairrank {

using CsvRow = std::vector<std::string>;

struct CsvDocument {
  CsvRow header;
  std::vector<CsvRow> rows;
};

// Splits RFC 4180 style text. Quoted fields may contain commas, doubled
// quotes and newlines. CR before LF is tolerated on input.
inline absl::StatusOr<std::vector<CsvRow>> ParseCsvRecords(
    std::string_view text) {
  std::vector<CsvRow> records;
  CsvRow current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  size_t line = 1;
  auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(current));
    current.clear();
  };
  for (size_t pos = 0; pos < text.size(); ++pos) {
    const char ch = text[pos];
    if (in_quotes) {
      if (ch == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started || !field.empty()) {
          return absl::InvalidArgumentError(
              internal::StrCat("stray quote on line ", line));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (pos + 1 < text.size() && text[pos + 1] == '\n') break;
        field.push_back(ch);
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) {
    return absl::InvalidArgumentError("unterminated quoted field");
  }
  if (field_started || !field.empty() || !current.empty()) end_record();
  return records;
}

inline absl::StatusOr<std::string> ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(
        internal::StrCat("cannot open '", path.string(), "'"));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Parses a header plus rectangular body. Blank trailing lines are ignored.
inline absl::StatusOr<CsvDocument> ParseCsvDocument(std::string_view text) {
  auto records = ParseCsvRecords(text);
  if (!records.ok()) return records.status();
  std::vector<CsvRow>& all = *records;
  while (!all.empty() && all.back().size() == 1 && all.back()[0].empty()) {
    all.pop_back();
  }
  if (all.empty()) return absl::InvalidArgumentError("missing CSV header");
  CsvDocument doc;
  doc.header = std::move(all.front());
  for (size_t r = 1; r < all.size(); ++r) {
    if (all[r].size() != doc.header.size()) {
      return absl::InvalidArgumentError(
          internal::StrCat("row ", r, " has ", all[r].size(), " fields, expected ",
                       doc.header.size()));
    }
    doc.rows.push_back(std::move(all[r]));
  }
  return doc;
}

inline absl::StatusOr<CsvDocument> ReadCsvDocument(
    const std::filesystem::path& path) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  auto doc = ParseCsvDocument(*text);
  if (!doc.ok()) {
    return absl::Status(doc.status().code(),
                        internal::StrCat(path.string(), ": ", doc.status().message()));
  }
  return doc;
}

inline std::string CsvEscape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

// Fixed 6-decimal rendering used by every output format.
inline std::string FormatReal(double value) {
  std::string out = fmt::format("{:.6f}", value);
  if (out == "-0.000000") out.erase(0, 1);
  return out;
}

// Writes to a sibling temporary file and renames it into place, so a failed
// write never leaves a partial file at `path`.
inline absl::Status WriteFileAtomically(const std::filesystem::path& path,
                                        std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      return absl::PermissionDeniedError(
          internal::StrCat("cannot write '", tmp.string(), "'"));
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      return absl::DataLossError(
          internal::StrCat("short write to '", tmp.string(), "'"));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    return absl::PermissionDeniedError(
        internal::StrCat("cannot rename into '", path.string(), "'"));
  }
  return absl::OkStatus();
}

}  // namespace fairrank

#endif  // FAIRRANK_CSV_H_
