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

#ifndef FAIRRANK_INGEST_H_
#define FAIRRANK_INGEST_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fairrank/internal/strings.h"
#include "fairrank/csv.h"
#include "fairrank/internal/status_macros.h"
#include "fairrank/ranking.h"

namespace fairrank {

enum class ColumnType { kNumeric, kCategorical };

struct Column {
  std::string name;
  ColumnType type = ColumnType::kCategorical;
  std::vector<std::string> text;
  std::vector<double> values;  // filled for numeric columns only
};

struct DatasetTable {
  std::string id_column;
  std::vector<std::string> row_ids;
  std::vector<Column> columns;  // includes the id column
  std::vector<size_t> dropped_rows;  // 1-based data row numbers

  size_t num_rows() const { return row_ids.size(); }

  const Column* Find(std::string_view name) const {
    for (const Column& column : columns) {
      if (column.name == name) return &column;
    }
    return nullptr;
  }

  absl::StatusOr<const Column*> Get(std::string_view name) const {
    const Column* column = Find(name);
    if (column == nullptr) {
      return absl::NotFoundError(internal::StrCat("unknown column '", name, "'"));
    }
    return column;
  }
};

struct LoadOptions {
  bool drop_incomplete_rows = false;
};

namespace internal {

inline bool IsMissing(std::string_view field) {
  return internal::StripAsciiWhitespace(field).empty();
}

inline bool ParseNumber(std::string_view field, double* out) {
  return internal::SimpleAtod(internal::StripAsciiWhitespace(field), out) &&
         std::isfinite(*out);
}

}  // namespace internal

// Columns whose every value parses as a finite number are numeric; the rest
// are categorical. Missing cells are errors unless rows are dropped.
inline absl::StatusOr<DatasetTable> ParseTable(std::string_view text,
                                               std::string_view id_column,
                                               const LoadOptions& options = {}) {
  FAIRRANK_ASSIGN_OR_RETURN(CsvDocument doc, ParseCsvDocument(text));
  std::optional<size_t> id_index;
  for (size_t c = 0; c < doc.header.size(); ++c) {
    if (doc.header[c] == id_column) id_index = c;
  }
  if (!id_index) {
    return absl::NotFoundError(
        internal::StrCat("unknown column '", id_column, "'"));
  }
  DatasetTable table;
  table.id_column = std::string(id_column);
  table.columns.resize(doc.header.size());
  for (size_t c = 0; c < doc.header.size(); ++c) {
    table.columns[c].name = doc.header[c];
  }
  std::unordered_set<std::string> ids;
  for (size_t r = 0; r < doc.rows.size(); ++r) {
    const CsvRow& row = doc.rows[r];
    std::optional<size_t> missing;
    for (size_t c = 0; c < row.size() && !missing; ++c) {
      if (internal::IsMissing(row[c])) missing = c;
    }
    if (missing) {
      if (options.drop_incomplete_rows) {
        table.dropped_rows.push_back(r + 1);
        continue;
      }
      return absl::FailedPreconditionError(
          internal::StrCat("missing value at row ", r + 1, ", column '",
                       doc.header[*missing], "'"));
    }
    const std::string id(internal::StripAsciiWhitespace(row[*id_index]));
    if (!ids.insert(id).second) {
      return absl::FailedPreconditionError(
          internal::StrCat("duplicate row id '", id, "' at row ", r + 1));
    }
    table.row_ids.push_back(id);
    for (size_t c = 0; c < row.size(); ++c) {
      table.columns[c].text.emplace_back(internal::StripAsciiWhitespace(row[c]));
    }
  }
  for (Column& column : table.columns) {
    std::vector<double> values(column.text.size());
    bool numeric = true;
    for (size_t r = 0; r < column.text.size() && numeric; ++r) {
      numeric = internal::ParseNumber(column.text[r], &values[r]);
    }
    if (numeric) {
      column.type = ColumnType::kNumeric;
      column.values = std::move(values);
    }
  }
  return table;
}

inline absl::StatusOr<DatasetTable> LoadTable(const std::filesystem::path& path,
                                              std::string_view id_column,
                                              const LoadOptions& options = {}) {
  FAIRRANK_ASSIGN_OR_RETURN(std::string text, ReadFile(path));
  auto table = ParseTable(text, id_column, options);
  if (!table.ok()) {
    return absl::Status(
        table.status().code(),
        internal::StrCat(path.string(), ": ", table.status().message()));
  }
  return table;
}

struct ProtectedPredicate {
  enum class Kind { kEquals, kLessThan };
  Kind kind = Kind::kEquals;
  std::string value;       // kEquals
  double threshold = 0.0;  // kLessThan

  static ProtectedPredicate Equals(std::string value) {
    return {Kind::kEquals, std::move(value), 0.0};
  }
  static ProtectedPredicate LessThan(double threshold) {
    return {Kind::kLessThan, "", threshold};
  }
};

struct ProtectedSpec {
  std::string column;
  ProtectedPredicate predicate;
};

struct ProtectedGroup {
  std::vector<bool> flags;
  double proportion = 0.0;
};

inline absl::StatusOr<ProtectedGroup> DeriveProtected(const DatasetTable& table,
                                                      const ProtectedSpec& spec) {
  FAIRRANK_ASSIGN_OR_RETURN(const Column* column, table.Get(spec.column));
  ProtectedGroup group;
  group.flags.reserve(table.num_rows());
  if (spec.predicate.kind == ProtectedPredicate::Kind::kLessThan) {
    if (column->type != ColumnType::kNumeric) {
      return absl::InvalidArgumentError(internal::StrCat(
          "less-than predicate needs a numeric column; '", column->name,
          "' is categorical"));
    }
    for (double v : column->values) {
      group.flags.push_back(v < spec.predicate.threshold);
    }
  } else {
    double target = 0.0;
    const bool numeric_target =
        column->type == ColumnType::kNumeric &&
        internal::ParseNumber(spec.predicate.value, &target);
    for (size_t r = 0; r < table.num_rows(); ++r) {
      group.flags.push_back(numeric_target
                                ? column->values[r] == target
                                : column->text[r] == spec.predicate.value);
    }
  }
  const auto hits = std::count(group.flags.begin(), group.flags.end(), true);
  group.proportion = group.flags.empty()
                         ? 0.0
                         : static_cast<double>(hits) /
                               static_cast<double>(group.flags.size());
  return group;
}

// (v - min) / (max - min); a constant column maps to zeros.
inline std::vector<double> MinMaxNormalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (size_t k = 0; k < values.size(); ++k) {
    out[k] = (values[k] - *lo) / range;
  }
  return out;
}

inline absl::StatusOr<std::vector<double>> NormalizedColumn(
    const DatasetTable& table, std::string_view name) {
  FAIRRANK_ASSIGN_OR_RETURN(const Column* column, table.Get(name));
  if (column->type != ColumnType::kNumeric) {
    return absl::InvalidArgumentError(
        internal::StrCat("column '", name, "' is not numeric"));
  }
  return MinMaxNormalize(column->values);
}

struct ScoreSpec {
  enum class Mode { kSingleAttribute, kEqualWeightSum };
  Mode mode = Mode::kSingleAttribute;
  std::vector<std::string> columns;

  static ScoreSpec Single(std::string column) {
    return {Mode::kSingleAttribute, {std::move(column)}};
  }
  static ScoreSpec EqualWeightSum(std::vector<std::string> columns) {
    return {Mode::kEqualWeightSum, std::move(columns)};
  }
};

// Ascending id order: numerically when both ids are integers, otherwise
// lexicographically.
inline bool IdLess(std::string_view a, std::string_view b) {
  int64_t x, y;
  const bool ax = internal::SimpleAtoi(a, &x);
  const bool by = internal::SimpleAtoi(b, &y);
  if (ax && by) return x != y ? x < y : a < b;
  if (ax != by) return ax;  // integer ids sort first
  return a < b;
}

inline absl::StatusOr<std::vector<double>> ComputeScores(
    const DatasetTable& table, const ScoreSpec& spec) {
  if (spec.columns.empty()) {
    return absl::InvalidArgumentError("score spec lists no columns");
  }
  if (spec.mode == ScoreSpec::Mode::kSingleAttribute) {
    FAIRRANK_ASSIGN_OR_RETURN(const Column* column, table.Get(spec.columns[0]));
    if (column->type != ColumnType::kNumeric) {
      return absl::InvalidArgumentError(
          internal::StrCat("column '", column->name, "' is not numeric"));
    }
    return column->values;
  }
  std::vector<double> scores(table.num_rows(), 0.0);
  for (const std::string& name : spec.columns) {
    FAIRRANK_ASSIGN_OR_RETURN(std::vector<double> normalized,
                              NormalizedColumn(table, name));
    for (size_t r = 0; r < scores.size(); ++r) scores[r] += normalized[r];
  }
  for (double& s : scores) s /= static_cast<double>(spec.columns.size());
  return scores;
}

// Order of row indices by descending score, ties by ascending row id.
inline std::vector<size_t> OrderByScore(std::span<const double> scores,
                                        const std::vector<std::string>& ids) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return IdLess(ids[a], ids[b]);
  });
  return order;
}

inline absl::StatusOr<Ranking> RankByScores(std::span<const double> scores,
                                            const std::vector<std::string>& ids,
                                            const std::vector<bool>& flags) {
  if (scores.size() != ids.size() || flags.size() != ids.size()) {
    return absl::InvalidArgumentError(internal::StrCat(
        "length mismatch: ", scores.size(), " scores, ", ids.size(), " ids, ",
        flags.size(), " flags"));
  }
  std::vector<Item> items;
  items.reserve(ids.size());
  for (size_t r : OrderByScore(scores, ids)) {
    items.push_back(Item{ids[r], flags[r], scores[r]});
  }
  return ValidateRanking(Ranking(std::move(items)));
}

inline absl::StatusOr<Ranking> ScoreAndRank(const DatasetTable& table,
                                            const ScoreSpec& spec,
                                            const std::vector<bool>& flags) {
  FAIRRANK_ASSIGN_OR_RETURN(std::vector<double> scores,
                            ComputeScores(table, spec));
  return RankByScores(scores, table.row_ids, flags);
}

}  // namespace fairrank

#endif  // FAIRRANK_INGEST_H_
