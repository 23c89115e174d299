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

#ifndef FAIRRANK_RANKING_H_
#define FAIRRANK_RANKING_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fairrank/internal/strings.h"
#include "fairrank/csv.h"

namespace fairrank {

inline constexpr int kDefaultStep = 10;

struct Item {
  std::string id;
  bool is_protected = false;
  std::optional<double> score;

  friend bool operator==(const Item&, const Item&) = default;
};

// An ordered list of items; position 1 (index 0) is the best. Group counts
// are derived from the items, so they cannot disagree with them.
class Ranking {
 public:
  Ranking() = default;
  explicit Ranking(std::vector<Item> items) : items_(std::move(items)) {
    for (const Item& item : items_) n_plus_ += item.is_protected ? 1 : 0;
  }

  const std::vector<Item>& items() const { return items_; }
  const Item& at(size_t index) const { return items_.at(index); }
  int64_t n() const { return static_cast<int64_t>(items_.size()); }
  int64_t n_plus() const { return n_plus_; }
  int64_t n_minus() const { return n() - n_plus_; }

  std::vector<bool> ProtectedFlags() const {
    std::vector<bool> flags;
    flags.reserve(items_.size());
    for (const Item& item : items_) flags.push_back(item.is_protected);
    return flags;
  }

  friend bool operator==(const Ranking&, const Ranking&) = default;

 private:
  std::vector<Item> items_;
  int64_t n_plus_ = 0;
};

// Builds a ranking from protected flags alone; ids are the 1-based positions.
inline Ranking RankingFromFlags(const std::vector<bool>& flags) {
  std::vector<Item> items;
  items.reserve(flags.size());
  for (size_t i = 0; i < flags.size(); ++i) {
    items.push_back(Item{std::to_string(i + 1), flags[i], std::nullopt});
  }
  return Ranking(std::move(items));
}

// Every broken invariant, in a stable order. Empty means valid.
inline std::vector<std::string> RankingViolations(const Ranking& ranking) {
  std::vector<std::string> violations;
  std::unordered_set<std::string_view> seen;
  std::unordered_set<std::string_view> reported;
  for (const Item& item : ranking.items()) {
    if (!seen.insert(item.id).second && reported.insert(item.id).second) {
      violations.push_back(internal::StrCat("duplicate id \"", item.id, "\""));
    }
  }
  if (ranking.n() < 2) {
    violations.push_back(internal::StrCat("n < 2 (n = ", ranking.n(), ")"));
  }
  return violations;
}

inline absl::StatusOr<Ranking> ValidateRanking(const Ranking& ranking) {
  const std::vector<std::string> violations = RankingViolations(ranking);
  if (!violations.empty()) {
    return absl::InvalidArgumentError(
        internal::StrCat("invalid ranking: ", internal::StrJoin(violations, "; ")));
  }
  return ranking;
}

struct CutoffSchedule {
  int step = kDefaultStep;
  std::vector<int64_t> cutoffs;

  friend bool operator==(const CutoffSchedule&, const CutoffSchedule&) = default;
};

// Multiples of `step` up to n, with n appended when it is not a multiple.
// Cutoff 1 is skipped since its discount is undefined.
inline absl::StatusOr<CutoffSchedule> BuildSchedule(int64_t n, int step) {
  if (n < 2) {
    return absl::InvalidArgumentError(
        internal::StrCat("schedule needs n >= 2, got ", n));
  }
  if (step < 1) {
    return absl::InvalidArgumentError(
        internal::StrCat("schedule needs step >= 1, got ", step));
  }
  CutoffSchedule schedule;
  schedule.step = step;
  schedule.cutoffs.reserve(static_cast<size_t>(n / step + 1));
  for (int64_t i = step; i <= n; i += step) {
    if (i >= 2) schedule.cutoffs.push_back(i);
  }
  if (schedule.cutoffs.empty() || schedule.cutoffs.back() != n) {
    schedule.cutoffs.push_back(n);
  }
  return schedule;
}

struct CutoffCount {
  int64_t cutoff = 0;
  int64_t count = 0;  // protected items among the top `cutoff`

  friend bool operator==(const CutoffCount&, const CutoffCount&) = default;
};

using PrefixCounts = std::vector<CutoffCount>;

inline absl::StatusOr<PrefixCounts> ComputePrefixCounts(
    const std::vector<bool>& flags, const CutoffSchedule& schedule) {
  PrefixCounts counts;
  counts.reserve(schedule.cutoffs.size());
  int64_t position = 0;
  int64_t running = 0;
  const auto n = static_cast<int64_t>(flags.size());
  for (int64_t cutoff : schedule.cutoffs) {
    if (cutoff > n) {
      return absl::InvalidArgumentError(internal::StrCat(
          "cutoff ", cutoff, " exceeds ranking length ", n));
    }
    if (cutoff < position) {
      return absl::InvalidArgumentError("cutoffs must be increasing");
    }
    for (; position < cutoff; ++position) {
      running += flags[static_cast<size_t>(position)] ? 1 : 0;
    }
    counts.push_back({cutoff, running});
  }
  return counts;
}

inline absl::StatusOr<PrefixCounts> ComputePrefixCounts(
    const Ranking& ranking, const CutoffSchedule& schedule) {
  return ComputePrefixCounts(ranking.ProtectedFlags(), schedule);
}

// Ranking CSV: header `id,protected,score`, rows in rank order. The score
// column may be absent or hold empty fields.
inline absl::StatusOr<Ranking> ParseRankingCsv(std::string_view text) {
  auto doc = ParseCsvDocument(text);
  if (!doc.ok()) return doc.status();
  const CsvRow& header = doc->header;
  const bool has_score = header.size() == 3 && header[2] == "score";
  if (header.size() < 2 || header[0] != "id" || header[1] != "protected" ||
      (header.size() == 3 && !has_score) || header.size() > 3) {
    return absl::InvalidArgumentError(
        "ranking CSV header must be id,protected[,score]");
  }
  std::vector<Item> items;
  items.reserve(doc->rows.size());
  for (size_t r = 0; r < doc->rows.size(); ++r) {
    const CsvRow& row = doc->rows[r];
    Item item;
    item.id = row[0];
    if (row[1] == "1") {
      item.is_protected = true;
    } else if (row[1] != "0") {
      return absl::InvalidArgumentError(internal::StrCat(
          "row ", r + 1, ": protected must be 0 or 1, got '", row[1], "'"));
    }
    if (has_score && !row[2].empty()) {
      double score;
      if (!internal::SimpleAtod(row[2], &score)) {
        return absl::InvalidArgumentError(internal::StrCat(
            "row ", r + 1, ": score '", row[2], "' is not a number"));
      }
      item.score = score;
    }
    items.push_back(std::move(item));
  }
  return Ranking(std::move(items));
}

inline absl::StatusOr<Ranking> ReadRankingCsv(
    const std::filesystem::path& path) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  auto ranking = ParseRankingCsv(*text);
  if (!ranking.ok()) {
    return absl::InvalidArgumentError(
        internal::StrCat(path.string(), ": ", ranking.status().message()));
  }
  return ranking;
}

inline std::string RankingToCsv(const Ranking& ranking) {
  std::string out = "id,protected,score\n";
  for (const Item& item : ranking.items()) {
    internal::StrAppend(&out, CsvEscape(item.id), ",", item.is_protected ? 1 : 0,
                    ",", item.score ? FormatReal(*item.score) : "", "\n");
  }
  return out;
}

}  // namespace fairrank

#endif  // FAIRRANK_RANKING_H_
