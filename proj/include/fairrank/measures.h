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

#ifndef FAIRRANK_MEASURES_H_
#define FAIRRANK_MEASURES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fairrank/internal/strings.h"
#include "fairrank/csv.h"
#include "fairrank/internal/status_macros.h"
#include "fairrank/ranking.h"

namespace fairrank {

enum class MeasureKind { kRnd, kRkl, kRrd };

inline std::string_view MeasureName(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::kRnd:
      return "rND";
    case MeasureKind::kRkl:
      return "rKL";
    case MeasureKind::kRrd:
      return "rRD";
  }
  return "?";
}

struct BinaryDistribution {
  double p_plus = 0.0;
  double p_minus = 0.0;
};

namespace internal {

// p * log2(p / q) with 0 * log(0 / q) = 0.
inline double KlComponent(double p, double q) {
  return p > 0.0 ? p * std::log2(p / q) : 0.0;
}

inline double ParityTermUnchecked(MeasureKind kind, int64_t cutoff,
                                  int64_t count, int64_t n, int64_t n_plus) {
  const auto i = static_cast<double>(cutoff);
  const auto c = static_cast<double>(count);
  const auto total = static_cast<double>(n);
  const auto plus = static_cast<double>(n_plus);
  switch (kind) {
    case MeasureKind::kRnd:
      return std::fabs(c / i - plus / total);
    case MeasureKind::kRkl:
      return KlComponent(c / i, plus / total) +
             KlComponent((i - c) / i, (total - plus) / total);
    case MeasureKind::kRrd: {
      // A ratio with a zero numerator or denominator counts as 0.
      const int64_t rest = cutoff - count;
      const int64_t n_minus = n - n_plus;
      const double prefix_ratio =
          (count > 0 && rest > 0) ? c / static_cast<double>(rest) : 0.0;
      const double global_ratio =
          (n_plus > 0 && n_minus > 0) ? plus / static_cast<double>(n_minus)
                                      : 0.0;
      return std::fabs(prefix_ratio - global_ratio);
    }
  }
  return 0.0;
}

// The single place the positional discount is applied; both the measure sum
// and the normalizer search go through it so their values agree bitwise.
inline double DiscountedTerm(MeasureKind kind, int64_t cutoff, int64_t count,
                             int64_t n, int64_t n_plus) {
  return ParityTermUnchecked(kind, cutoff, count, n, n_plus) /
         std::log2(static_cast<double>(cutoff));
}

inline absl::Status CheckGroup(int64_t n, int64_t n_plus) {
  if (n_plus <= 0 || n_plus >= n) {
    return absl::InvalidArgumentError(internal::StrCat(
        "degenerate protected group: n_plus = ", n_plus, " of n = ", n,
        "; both groups must be nonempty"));
  }
  return absl::OkStatus();
}

inline absl::Status CheckRrdApplicable(int64_t n, int64_t n_plus,
                                       bool allow_majority) {
  if (!allow_majority && 2 * n_plus > n) {
    return absl::FailedPreconditionError(internal::StrCat(
        "rRD is inapplicable: protected group is the majority (n_plus = ",
        n_plus, " > n / 2 = ", n / 2.0, ")"));
  }
  return absl::OkStatus();
}

}  // namespace internal

inline absl::StatusOr<double> KlDivergence(const BinaryDistribution& p,
                                           const BinaryDistribution& q) {
  if (!(q.p_plus > 0.0) || !(q.p_minus > 0.0)) {
    return absl::InvalidArgumentError(
        "degenerate reference distribution: Q has a zero component");
  }
  const double kl = internal::KlComponent(p.p_plus, q.p_plus) +
                    internal::KlComponent(p.p_minus, q.p_minus);
  // Rounding can leave a tiny negative value when P is Q up to an ulp.
  return std::max(kl, 0.0);
}

// The undiscounted set-wise parity at one cutoff.
inline absl::StatusOr<double> ParityTerm(MeasureKind kind, int64_t cutoff,
                                         int64_t count, int64_t n,
                                         int64_t n_plus) {
  FAIRRANK_RETURN_IF_ERROR(internal::CheckGroup(n, n_plus));
  if (cutoff < 1 || cutoff > n) {
    return absl::InvalidArgumentError(
        internal::StrCat("cutoff ", cutoff, " outside [1, ", n, "]"));
  }
  const int64_t lo = std::max<int64_t>(0, cutoff - (n - n_plus));
  const int64_t hi = std::min(cutoff, n_plus);
  if (count < lo || count > hi) {
    return absl::InvalidArgumentError(
        internal::StrCat("infeasible protected count ", count, " at cutoff ",
                     cutoff, " (feasible [", lo, ", ", hi, "])"));
  }
  return internal::ParityTermUnchecked(kind, cutoff, count, n, n_plus);
}

inline absl::StatusOr<double> UnnormalizedSum(MeasureKind kind,
                                              const PrefixCounts& counts,
                                              int64_t n, int64_t n_plus) {
  double sum = 0.0;
  for (const CutoffCount& cc : counts) {
    FAIRRANK_RETURN_IF_ERROR(
        ParityTerm(kind, cc.cutoff, cc.count, n, n_plus).status());
    if (cc.cutoff < 2) {
      return absl::InvalidArgumentError("cutoffs must be >= 2");
    }
    sum += internal::DiscountedTerm(kind, cc.cutoff, cc.count, n, n_plus);
  }
  return sum;
}

namespace internal {

// Maximum of the discounted term sum over every feasible prefix-count path.
// Counts at consecutive cutoffs i < j satisfy c_i <= c_j <= c_i + (j - i)
// and stay within [max(0, i - n_minus), min(i, n_plus)]; every such path is
// realised by some ranking, and each term only depends on its own count, so
// the path maximum is the ranking maximum.
inline double MaxDiscountedSum(MeasureKind kind, int64_t n, int64_t n_plus,
                               const CutoffSchedule& schedule) {
  const int64_t n_minus = n - n_plus;
  std::vector<double> best;
  std::vector<double> next;
  int64_t prev_cutoff = 0;
  int64_t prev_lo = 0;
  int64_t prev_hi = 0;
  bool first = true;
  std::deque<int64_t> window;  // counts with decreasing best values
  for (int64_t cutoff : schedule.cutoffs) {
    const int64_t lo = std::max<int64_t>(0, cutoff - n_minus);
    const int64_t hi = std::min(cutoff, n_plus);
    next.assign(static_cast<size_t>(hi - lo + 1), 0.0);
    if (first) {
      for (int64_t c = lo; c <= hi; ++c) {
        next[static_cast<size_t>(c - lo)] =
            DiscountedTerm(kind, cutoff, c, n, n_plus);
      }
      first = false;
    } else {
      const int64_t gap = cutoff - prev_cutoff;
      window.clear();
      int64_t pushed = prev_lo;  // next previous count to enter the window
      for (int64_t c = lo; c <= hi; ++c) {
        // Predecessors of c are [c - gap, c] intersected with the old range.
        const int64_t from = std::max(prev_lo, c - gap);
        const int64_t to = std::min(prev_hi, c);
        for (; pushed <= to; ++pushed) {
          const double v = best[static_cast<size_t>(pushed - prev_lo)];
          while (!window.empty() &&
                 best[static_cast<size_t>(window.back() - prev_lo)] <= v) {
            window.pop_back();
          }
          window.push_back(pushed);
        }
        while (!window.empty() && window.front() < from) window.pop_front();
        const double prefix = best[static_cast<size_t>(window.front() - prev_lo)];
        next[static_cast<size_t>(c - lo)] =
            prefix + DiscountedTerm(kind, cutoff, c, n, n_plus);
      }
    }
    best.swap(next);
    prev_cutoff = cutoff;
    prev_lo = lo;
    prev_hi = hi;
  }
  return *std::max_element(best.begin(), best.end());
}

// Counts of the ranking that places every nonprotected item first.
inline PrefixCounts NonprotectedFirstCounts(int64_t n, int64_t n_plus,
                                            const CutoffSchedule& schedule) {
  PrefixCounts counts;
  counts.reserve(schedule.cutoffs.size());
  for (int64_t cutoff : schedule.cutoffs) {
    counts.push_back({cutoff, std::max<int64_t>(0, cutoff - (n - n_plus))});
  }
  return counts;
}

inline double ComputeNormalizer(MeasureKind kind, int64_t n, int64_t n_plus,
                                const CutoffSchedule& schedule) {
  if (kind == MeasureKind::kRrd) {
    double sum = 0.0;
    for (const CutoffCount& cc : NonprotectedFirstCounts(n, n_plus, schedule)) {
      sum += DiscountedTerm(kind, cc.cutoff, cc.count, n, n_plus);
    }
    return sum;
  }
  return MaxDiscountedSum(kind, n, n_plus, schedule);
}

// Thread-safe memo keyed by (kind, n, n_plus, step). Concurrent misses may
// compute the same value twice; the first insert wins and both are equal.
class NormalizerCache {
 public:
  static NormalizerCache& Global() {
    static NormalizerCache* cache = new NormalizerCache();
    return *cache;
  }

  double Get(MeasureKind kind, int64_t n, int64_t n_plus,
             const CutoffSchedule& schedule) {
    const Key key{kind, n, n_plus, schedule.step};
    {
      std::shared_lock lock(mu_);
      auto it = values_.find(key);
      if (it != values_.end()) return it->second;
    }
    const double value = ComputeNormalizer(kind, n, n_plus, schedule);
    std::unique_lock lock(mu_);
    return values_.emplace(key, value).first->second;
  }

  size_t size() const {
    std::shared_lock lock(mu_);
    return values_.size();
  }

 private:
  using Key = std::tuple<MeasureKind, int64_t, int64_t, int>;
  mutable std::shared_mutex mu_;
  std::map<Key, double> values_;
};

}  // namespace internal

// Highest attainable unnormalized value for (n, n_plus, step); for rRD, the
// value of the ranking with every nonprotected item ahead of the protected
// ones. Zero only when the schedule is the single cutoff n, where every
// ranking scores zero.
inline absl::StatusOr<double> Normalizer(MeasureKind kind, int64_t n,
                                         int64_t n_plus, int step,
                                         bool allow_majority_rrd = false) {
  FAIRRANK_RETURN_IF_ERROR(internal::CheckGroup(n, n_plus));
  if (kind == MeasureKind::kRrd) {
    FAIRRANK_RETURN_IF_ERROR(
        internal::CheckRrdApplicable(n, n_plus, allow_majority_rrd));
  }
  FAIRRANK_ASSIGN_OR_RETURN(CutoffSchedule schedule, BuildSchedule(n, step));
  return internal::NormalizerCache::Global().Get(kind, n, n_plus, schedule);
}

namespace internal {

inline double Normalize(double sum, double z) { return z > 0.0 ? sum / z : 0.0; }

}  // namespace internal

inline absl::StatusOr<double> Measure(MeasureKind kind, const Ranking& ranking,
                                      int step = kDefaultStep,
                                      bool allow_majority_rrd = false) {
  FAIRRANK_RETURN_IF_ERROR(ValidateRanking(ranking).status());
  const int64_t n = ranking.n();
  const int64_t n_plus = ranking.n_plus();
  FAIRRANK_ASSIGN_OR_RETURN(
      double z, Normalizer(kind, n, n_plus, step, allow_majority_rrd));
  FAIRRANK_ASSIGN_OR_RETURN(CutoffSchedule schedule, BuildSchedule(n, step));
  FAIRRANK_ASSIGN_OR_RETURN(PrefixCounts counts,
                            ComputePrefixCounts(ranking, schedule));
  FAIRRANK_ASSIGN_OR_RETURN(double sum, UnnormalizedSum(kind, counts, n, n_plus));
  return internal::Normalize(sum, z);
}

struct CutoffDiagnostics {
  int64_t cutoff = 0;
  int64_t count = 0;
  double term_rnd = 0.0;
  double term_rkl = 0.0;
  std::optional<double> term_rrd;
};

struct FairnessReport {
  int64_t n = 0;
  int64_t n_plus = 0;
  int step = kDefaultStep;
  double rnd = 0.0;
  double rkl = 0.0;
  std::optional<double> rrd;  // empty when rRD is inapplicable
  double z_rnd = 0.0;
  double z_rkl = 0.0;
  std::optional<double> z_rrd;
  std::vector<CutoffDiagnostics> per_cutoff;  // undiscounted terms

  bool rrd_applicable() const { return rrd.has_value(); }
};

inline absl::StatusOr<FairnessReport> ComputeFairnessReport(
    const Ranking& ranking, int step = kDefaultStep,
    bool allow_majority_rrd = false) {
  FAIRRANK_RETURN_IF_ERROR(ValidateRanking(ranking).status());
  const int64_t n = ranking.n();
  const int64_t n_plus = ranking.n_plus();
  FAIRRANK_RETURN_IF_ERROR(internal::CheckGroup(n, n_plus));
  FAIRRANK_ASSIGN_OR_RETURN(CutoffSchedule schedule, BuildSchedule(n, step));
  FAIRRANK_ASSIGN_OR_RETURN(PrefixCounts counts,
                            ComputePrefixCounts(ranking, schedule));
  const bool rrd_ok =
      internal::CheckRrdApplicable(n, n_plus, allow_majority_rrd).ok();

  FairnessReport report;
  report.n = n;
  report.n_plus = n_plus;
  report.step = step;
  auto& cache = internal::NormalizerCache::Global();
  report.z_rnd = cache.Get(MeasureKind::kRnd, n, n_plus, schedule);
  report.z_rkl = cache.Get(MeasureKind::kRkl, n, n_plus, schedule);
  if (rrd_ok) report.z_rrd = cache.Get(MeasureKind::kRrd, n, n_plus, schedule);

  double sum_rnd = 0.0;
  double sum_rkl = 0.0;
  double sum_rrd = 0.0;
  for (const CutoffCount& cc : counts) {
    CutoffDiagnostics diag;
    diag.cutoff = cc.cutoff;
    diag.count = cc.count;
    diag.term_rnd = internal::ParityTermUnchecked(MeasureKind::kRnd, cc.cutoff,
                                                  cc.count, n, n_plus);
    diag.term_rkl = internal::ParityTermUnchecked(MeasureKind::kRkl, cc.cutoff,
                                                  cc.count, n, n_plus);
    sum_rnd += internal::DiscountedTerm(MeasureKind::kRnd, cc.cutoff, cc.count,
                                        n, n_plus);
    sum_rkl += internal::DiscountedTerm(MeasureKind::kRkl, cc.cutoff, cc.count,
                                        n, n_plus);
    if (rrd_ok) {
      diag.term_rrd = internal::ParityTermUnchecked(
          MeasureKind::kRrd, cc.cutoff, cc.count, n, n_plus);
      sum_rrd += internal::DiscountedTerm(MeasureKind::kRrd, cc.cutoff,
                                          cc.count, n, n_plus);
    }
    report.per_cutoff.push_back(diag);
  }
  report.rnd = internal::Normalize(sum_rnd, report.z_rnd);
  report.rkl = internal::Normalize(sum_rkl, report.z_rkl);
  if (rrd_ok) report.rrd = internal::Normalize(sum_rrd, *report.z_rrd);
  return report;
}

namespace internal {

inline std::string JsonReal(const std::optional<double>& value) {
  return value ? FormatReal(*value) : "null";
}

}  // namespace internal

// Stable field names; reals with 6 decimals; null for inapplicable rRD.
inline std::string FairnessReportToJson(const FairnessReport& report) {
  std::string out = internal::StrCat(
      "{\n  \"n\": ", report.n, ",\n  \"n_plus\": ", report.n_plus,
      ",\n  \"step\": ", report.step, ",\n  \"rnd\": ", FormatReal(report.rnd),
      ",\n  \"rkl\": ", FormatReal(report.rkl),
      ",\n  \"rrd\": ", internal::JsonReal(report.rrd),
      ",\n  \"normalizers\": {\"rnd\": ", FormatReal(report.z_rnd),
      ", \"rkl\": ", FormatReal(report.z_rkl),
      ", \"rrd\": ", internal::JsonReal(report.z_rrd), "},\n  \"per_cutoff\": [");
  for (size_t k = 0; k < report.per_cutoff.size(); ++k) {
    const CutoffDiagnostics& d = report.per_cutoff[k];
    internal::StrAppend(&out, k == 0 ? "\n" : ",\n", "    {\"i\": ", d.cutoff,
                    ", \"c\": ", d.count,
                    ", \"term_rnd\": ", FormatReal(d.term_rnd),
                    ", \"term_rkl\": ", FormatReal(d.term_rkl),
                    ", \"term_rrd\": ", internal::JsonReal(d.term_rrd), "}");
  }
  internal::StrAppend(&out, report.per_cutoff.empty() ? "]\n}\n" : "\n  ]\n}\n");
  return out;
}

}  // namespace fairrank

#endif  // FAIRRANK_MEASURES_H_
