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

#ifndef FAIRRANK_GENERATOR_H_
#define FAIRRANK_GENERATOR_H_

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fairrank/internal/strings.h"
#include "fairrank/csv.h"
#include "fairrank/internal/status_macros.h"
#include "fairrank/measures.h"
#include "fairrank/ranking.h"
#include "fairrank/rng.h"

namespace fairrank {

struct GeneratorConfig {
  double fairness_probability = 0.5;
  uint64_t seed = 0;
};

inline absl::Status ValidateFairnessProbability(double f) {
  if (!(f >= 0.0 && f <= 1.0)) {
    return absl::InvalidArgumentError(
        internal::StrCat("fairness probability must lie in [0, 1], got ", f));
  }
  return absl::OkStatus();
}

// Merges the protected and nonprotected subsequences of `base`. While both
// are nonempty, a uniform draw p on [0, 1) takes the next protected item
// when p < f and the next nonprotected item otherwise; the leftover
// subsequence is then appended. Order within each group is kept.
inline absl::StatusOr<Ranking> GenerateUnfair(const Ranking& base,
                                              const GeneratorConfig& config) {
  FAIRRANK_RETURN_IF_ERROR(ValidateRanking(base).status());
  FAIRRANK_RETURN_IF_ERROR(
      ValidateFairnessProbability(config.fairness_probability));
  std::vector<const Item*> plus;
  std::vector<const Item*> minus;
  for (const Item& item : base.items()) {
    (item.is_protected ? plus : minus).push_back(&item);
  }
  Rng rng(config.seed);
  std::vector<Item> out;
  out.reserve(base.items().size());
  size_t next_plus = 0;
  size_t next_minus = 0;
  while (next_plus < plus.size() && next_minus < minus.size()) {
    if (rng.Uniform() < config.fairness_probability) {
      out.push_back(*plus[next_plus++]);
    } else {
      out.push_back(*minus[next_minus++]);
    }
  }
  for (; next_plus < plus.size(); ++next_plus) out.push_back(*plus[next_plus]);
  for (; next_minus < minus.size(); ++next_minus) {
    out.push_back(*minus[next_minus]);
  }
  return Ranking(std::move(out));
}

// Seeded uniform permutation of p1..p{n_plus} (protected) and q1..q{n_minus}.
inline absl::StatusOr<Ranking> RandomBaseRanking(int64_t n, int64_t n_plus,
                                                 uint64_t seed) {
  if (n < 2 || n_plus < 0 || n_plus > n) {
    return absl::InvalidArgumentError(internal::StrCat(
        "need n >= 2 and 0 <= n_plus <= n, got n = ", n, ", n_plus = ", n_plus));
  }
  std::vector<Item> items;
  items.reserve(static_cast<size_t>(n));
  for (int64_t k = 1; k <= n_plus; ++k) {
    items.push_back(Item{internal::StrCat("p", k), true, std::nullopt});
  }
  for (int64_t k = 1; k <= n - n_plus; ++k) {
    items.push_back(Item{internal::StrCat("q", k), false, std::nullopt});
  }
  Rng rng(seed);
  rng.Shuffle(std::span<Item>(items));
  return Ranking(std::move(items));
}

struct SweepRow {
  double f = 0.0;
  uint64_t seed = 0;
  double rnd = 0.0;
  double rkl = 0.0;
  std::optional<double> rrd;
};

struct SweepAggregate {
  double f = 0.0;
  int64_t runs = 0;
  double mean_rnd = 0.0;
  double mean_rkl = 0.0;
  std::optional<double> mean_rrd;
};

// Seed of the generator stream owned by one (f, seed) cell.
inline uint64_t SweepCellSeed(double f, uint64_t seed) {
  return DeriveStreamSeed(seed, std::bit_cast<uint64_t>(f));
}

// One row per (f, seed) in grid order. The base ranking for a seed is shared
// across the f grid; each cell draws from its own generator stream, so the
// result does not depend on `threads`.
inline absl::StatusOr<std::vector<SweepRow>> Sweep(
    int64_t n, int64_t n_plus, const std::vector<double>& f_grid,
    const std::vector<uint64_t>& seeds, int step = kDefaultStep,
    int threads = 0) {
  FAIRRANK_RETURN_IF_ERROR(internal::CheckGroup(n, n_plus));
  FAIRRANK_RETURN_IF_ERROR(BuildSchedule(n, step).status());
  for (double f : f_grid) FAIRRANK_RETURN_IF_ERROR(ValidateFairnessProbability(f));

  std::vector<Ranking> bases;
  bases.reserve(seeds.size());
  for (uint64_t seed : seeds) {
    FAIRRANK_ASSIGN_OR_RETURN(Ranking base, RandomBaseRanking(n, n_plus, seed));
    bases.push_back(std::move(base));
  }

  const size_t cells = f_grid.size() * seeds.size();
  std::vector<SweepRow> rows(cells);
  std::vector<absl::Status> statuses(cells);
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t cell = next++; cell < cells; cell = next++) {
      const size_t fi = cell / seeds.size();
      const size_t si = cell % seeds.size();
      SweepRow& row = rows[cell];
      row.f = f_grid[fi];
      row.seed = seeds[si];
      auto ranking = GenerateUnfair(
          bases[si], GeneratorConfig{row.f, SweepCellSeed(row.f, row.seed)});
      if (!ranking.ok()) {
        statuses[cell] = ranking.status();
        continue;
      }
      auto report = ComputeFairnessReport(*ranking, step);
      if (!report.ok()) {
        statuses[cell] = report.status();
        continue;
      }
      row.rnd = report->rnd;
      row.rkl = report->rkl;
      row.rrd = report->rrd;
    }
  };
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<size_t>(workers, std::max<size_t>(cells, 1)));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const absl::Status& status : statuses) FAIRRANK_RETURN_IF_ERROR(status);
  return rows;
}

// Per-f means, in first-appearance order of f.
inline std::vector<SweepAggregate> AggregateSweep(
    const std::vector<SweepRow>& rows) {
  std::vector<SweepAggregate> out;
  std::vector<int64_t> rrd_runs;
  std::map<double, size_t> index;
  for (const SweepRow& row : rows) {
    auto [it, inserted] = index.emplace(row.f, out.size());
    if (inserted) {
      out.push_back(SweepAggregate{row.f, 0, 0.0, 0.0, std::nullopt});
      rrd_runs.push_back(0);
    }
    SweepAggregate& agg = out[it->second];
    ++agg.runs;
    agg.mean_rnd += row.rnd;
    agg.mean_rkl += row.rkl;
    if (row.rrd) {
      agg.mean_rrd = agg.mean_rrd.value_or(0.0) + *row.rrd;
      ++rrd_runs[it->second];
    }
  }
  for (size_t k = 0; k < out.size(); ++k) {
    out[k].mean_rnd /= static_cast<double>(out[k].runs);
    out[k].mean_rkl /= static_cast<double>(out[k].runs);
    if (out[k].mean_rrd) *out[k].mean_rrd /= static_cast<double>(rrd_runs[k]);
  }
  return out;
}

inline std::string SweepToCsv(const std::vector<SweepRow>& rows) {
  std::string out = "f,seed,rnd,rkl,rrd\n";
  for (const SweepRow& row : rows) {
    internal::StrAppend(&out, FormatReal(row.f), ",", row.seed, ",",
                    FormatReal(row.rnd), ",", FormatReal(row.rkl), ",",
                    row.rrd ? FormatReal(*row.rrd) : "", "\n");
  }
  return out;
}

inline std::string SweepAggregateToCsv(const std::vector<SweepAggregate>& rows) {
  std::string out = "f,runs,mean_rnd,mean_rkl,mean_rrd\n";
  for (const SweepAggregate& row : rows) {
    internal::StrAppend(&out, FormatReal(row.f), ",", row.runs, ",",
                    FormatReal(row.mean_rnd), ",", FormatReal(row.mean_rkl), ",",
                    row.mean_rrd ? FormatReal(*row.mean_rrd) : "", "\n");
  }
  return out;
}

// "start:stop:step", both endpoints included within 1e-9, or a comma list.
inline absl::StatusOr<std::vector<double>> ParseFGrid(std::string_view text) {
  std::vector<double> grid;
  const std::vector<std::string_view> parts = internal::StrSplit(text, ':');
  if (parts.size() == 3) {
    double start, stop, step;
    if (!internal::SimpleAtod(parts[0], &start) ||
        !internal::SimpleAtod(parts[1], &stop) ||
        !internal::SimpleAtod(parts[2], &step) || !(step > 0.0) || stop < start) {
      return absl::InvalidArgumentError(
          internal::StrCat("bad f grid '", text, "', expected start:stop:step"));
    }
    constexpr double kTol = 1e-9;
    for (int64_t k = 0;; ++k) {
      double f = start + static_cast<double>(k) * step;
      if (f > stop + kTol) break;
      if (std::fabs(f - stop) <= kTol) f = stop;
      // Snap to 12 decimals so 0.1 * 3 prints and compares as 0.3.
      grid.push_back(std::round(f * 1e12) / 1e12);
    }
  } else if (parts.size() == 1) {
    for (std::string_view piece : internal::StrSplit(text, ',')) {
      double f;
      if (!internal::SimpleAtod(piece, &f)) {
        return absl::InvalidArgumentError(
            internal::StrCat("bad f value '", piece, "'"));
      }
      grid.push_back(f);
    }
  } else {
    return absl::InvalidArgumentError(
        internal::StrCat("bad f grid '", text, "', expected start:stop:step"));
  }
  for (double f : grid) FAIRRANK_RETURN_IF_ERROR(ValidateFairnessProbability(f));
  return grid;
}

}  // namespace fairrank

#endif  // FAIRRANK_GENERATOR_H_
