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

#ifndef FAIRRANK_FAIROPT_H_
#define FAIRRANK_FAIROPT_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fairrank/internal/strings.h"
#include "fairrank/csv.h"
#include "fairrank/ingest.h"
#include "fairrank/internal/status_macros.h"
#include "fairrank/measures.h"
#include "fairrank/ranking.h"
#include "fairrank/rng.h"

namespace fairrank {

// Row-major n x m features in [0, 1], with the protected flag and the
// ground-truth score of each row.
struct FeatureMatrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> x;
  std::vector<bool> is_protected;
  std::vector<double> y;
  std::vector<std::string> ids;

  std::span<const double> row(size_t r) const {
    return std::span<const double>(x).subspan(r * cols, cols);
  }
};

inline absl::Status ValidateFeatures(const FeatureMatrix& features) {
  if (features.rows == 0 || features.cols == 0) {
    return absl::InvalidArgumentError("feature matrix is empty");
  }
  if (features.x.size() != features.rows * features.cols ||
      features.is_protected.size() != features.rows ||
      features.y.size() != features.rows ||
      features.ids.size() != features.rows) {
    return absl::InvalidArgumentError("feature matrix dimensions disagree");
  }
  for (double v : features.x) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError("feature matrix has non-finite entries");
    }
  }
  for (double v : features.y) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError("scores have non-finite entries");
    }
  }
  const auto plus =
      std::count(features.is_protected.begin(), features.is_protected.end(), true);
  if (plus == 0 || static_cast<size_t>(plus) == features.rows) {
    return absl::InvalidArgumentError(
        "both protected and nonprotected rows are required");
  }
  return absl::OkStatus();
}

// Min-max normalizes each listed column and the score vector.
inline absl::StatusOr<FeatureMatrix> BuildFeatureMatrix(
    const DatasetTable& table, const std::vector<std::string>& feature_columns,
    const std::vector<bool>& flags, std::span<const double> scores) {
  if (feature_columns.empty()) {
    return absl::InvalidArgumentError("no feature columns");
  }
  if (flags.size() != table.num_rows() || scores.size() != table.num_rows()) {
    return absl::InvalidArgumentError("flags/scores do not match table rows");
  }
  FeatureMatrix features;
  features.rows = table.num_rows();
  features.cols = feature_columns.size();
  features.x.assign(features.rows * features.cols, 0.0);
  for (size_t c = 0; c < feature_columns.size(); ++c) {
    FAIRRANK_ASSIGN_OR_RETURN(std::vector<double> column,
                              NormalizedColumn(table, feature_columns[c]));
    for (size_t r = 0; r < features.rows; ++r) {
      features.x[r * features.cols + c] = column[r];
    }
  }
  features.is_protected = flags;
  features.y = MinMaxNormalize(scores);
  features.ids = table.row_ids;
  FAIRRANK_RETURN_IF_ERROR(ValidateFeatures(features));
  return features;
}

struct PrototypeModel {
  size_t k = 0;
  size_t m = 0;
  std::vector<double> prototypes;  // k x m, row-major
  std::vector<double> weights;     // k

  std::span<const double> prototype(size_t j) const {
    return std::span<const double>(prototypes).subspan(j * m, m);
  }
};

struct Hyperparams {
  double a_x = 0.01;
  double a_y = 1.0;
  double a_z = 5.0;
  size_t k = 10;
  double learning_rate = 0.01;
  int64_t max_iters = 500;
  double early_stop_rel_tol = 0.0;
  uint64_t seed = 1;
  int step = kDefaultStep;  // cutoff step for the traced fairness measures
};

inline absl::Status ValidateHyperparams(const Hyperparams& h) {
  if (!(h.a_x >= 0.0) || !(h.a_y >= 0.0) || !(h.a_z >= 0.0)) {
    return absl::InvalidArgumentError("loss weights must be non-negative");
  }
  if (!(h.a_x > 0.0 || h.a_y > 0.0 || h.a_z > 0.0)) {
    return absl::InvalidArgumentError("at least one loss weight must be positive");
  }
  if (h.k < 1) return absl::InvalidArgumentError("K must be >= 1");
  if (!(h.learning_rate > 0.0)) {
    return absl::InvalidArgumentError("learning rate must be positive");
  }
  if (h.max_iters < 1) return absl::InvalidArgumentError("max_iters must be >= 1");
  if (!(h.early_stop_rel_tol >= 0.0)) {
    return absl::InvalidArgumentError("early stop tolerance must be >= 0");
  }
  if (h.step < 1) return absl::InvalidArgumentError("step must be >= 1");
  return absl::OkStatus();
}

namespace internal {

inline absl::Status CheckDimensions(const FeatureMatrix& features,
                                    const PrototypeModel& model) {
  if (model.k < 1 || model.m != features.cols ||
      model.prototypes.size() != model.k * model.m ||
      model.weights.size() != model.k) {
    return absl::InvalidArgumentError(internal::StrCat(
        "model (K = ", model.k, ", m = ", model.m,
        ") does not fit features with m = ", features.cols));
  }
  if (features.x.size() != features.rows * features.cols) {
    return absl::InvalidArgumentError("feature matrix dimensions disagree");
  }
  return absl::OkStatus();
}

inline double SquaredDistance(std::span<const double> a,
                              std::span<const double> b) {
  double d = 0.0;
  for (size_t c = 0; c < a.size(); ++c) {
    const double diff = a[c] - b[c];
    d += diff * diff;
  }
  return d;
}

inline double Sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Softmax over negative squared distances; unchecked.
inline std::vector<double> Assignments(const FeatureMatrix& features,
                                       const PrototypeModel& model) {
  std::vector<double> out(features.rows * model.k);
  std::vector<double> logits(model.k);
  for (size_t r = 0; r < features.rows; ++r) {
    for (size_t j = 0; j < model.k; ++j) {
      logits[j] = -SquaredDistance(features.row(r), model.prototype(j));
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (size_t j = 0; j < model.k; ++j) {
      logits[j] = std::exp(logits[j] - top);
      total += logits[j];
    }
    for (size_t j = 0; j < model.k; ++j) {
      out[r * model.k + j] = logits[j] / total;
    }
  }
  return out;
}

}  // namespace internal

// n x K row-stochastic matrix, row-major.
inline absl::StatusOr<std::vector<double>> SoftAssignments(
    const FeatureMatrix& features, const PrototypeModel& model) {
  FAIRRANK_RETURN_IF_ERROR(internal::CheckDimensions(features, model));
  return internal::Assignments(features, model);
}

struct LossTerms {
  double l_x = 0.0;  // mean squared reconstruction error
  double l_y = 0.0;  // mean absolute score error
  double l_z = 0.0;  // sum over prototypes of the group-mean gap
};

namespace internal {

struct GroupSizes {
  double plus = 0.0;
  double minus = 0.0;
};

inline GroupSizes CountGroups(const FeatureMatrix& features) {
  GroupSizes sizes;
  for (bool p : features.is_protected) (p ? sizes.plus : sizes.minus) += 1.0;
  return sizes;
}

// Forward pass shared by the losses and the gradient.
struct Forward {
  std::vector<double> assign;      // n x K
  std::vector<double> recon;       // n x m
  std::vector<double> estimate;    // n
  std::vector<double> group_gap;   // K: mean_plus - mean_minus
  LossTerms losses;
};

inline Forward RunForward(const FeatureMatrix& features,
                          const PrototypeModel& model) {
  Forward fw;
  const size_t n = features.rows;
  const size_t m = features.cols;
  const size_t k = model.k;
  fw.assign = Assignments(features, model);
  fw.recon.assign(n * m, 0.0);
  fw.estimate.assign(n, 0.0);
  fw.group_gap.assign(k, 0.0);
  std::vector<double> sum_plus(k, 0.0);
  std::vector<double> sum_minus(k, 0.0);
  const GroupSizes sizes = CountGroups(features);
  double sum_x = 0.0;
  double sum_y = 0.0;
  for (size_t r = 0; r < n; ++r) {
    const double* a = &fw.assign[r * k];
    double* rec = &fw.recon[r * m];
    double est = 0.0;
    for (size_t j = 0; j < k; ++j) {
      const auto v = model.prototype(j);
      for (size_t c = 0; c < m; ++c) rec[c] += a[j] * v[c];
      est += a[j] * model.weights[j];
      (features.is_protected[r] ? sum_plus : sum_minus)[j] += a[j];
    }
    fw.estimate[r] = est;
    const auto xr = features.row(r);
    for (size_t c = 0; c < m; ++c) {
      const double diff = xr[c] - rec[c];
      sum_x += diff * diff;
    }
    sum_y += std::fabs(features.y[r] - est);
  }
  fw.losses.l_x = sum_x / static_cast<double>(n);
  fw.losses.l_y = sum_y / static_cast<double>(n);
  for (size_t j = 0; j < k; ++j) {
    fw.group_gap[j] = sum_plus[j] / sizes.plus - sum_minus[j] / sizes.minus;
    fw.losses.l_z += std::fabs(fw.group_gap[j]);
  }
  return fw;
}

}  // namespace internal

inline absl::StatusOr<LossTerms> ComputeLosses(const FeatureMatrix& features,
                                               const PrototypeModel& model) {
  FAIRRANK_RETURN_IF_ERROR(ValidateFeatures(features));
  FAIRRANK_RETURN_IF_ERROR(internal::CheckDimensions(features, model));
  return internal::RunForward(features, model).losses;
}

inline double CombineLosses(const LossTerms& terms, const Hyperparams& h) {
  return h.a_x * terms.l_x + h.a_y * terms.l_y + h.a_z * terms.l_z;
}

inline absl::StatusOr<double> TotalLoss(const FeatureMatrix& features,
                                        const PrototypeModel& model,
                                        const Hyperparams& h) {
  FAIRRANK_RETURN_IF_ERROR(ValidateHyperparams(h));
  FAIRRANK_ASSIGN_OR_RETURN(LossTerms terms, ComputeLosses(features, model));
  return CombineLosses(terms, h);
}

struct ModelGradient {
  std::vector<double> prototypes;  // k x m
  std::vector<double> weights;     // k
};

namespace internal {

// Analytic gradient of the weighted loss. |.| uses subgradient 0 at zero.
inline ModelGradient BackwardPass(const FeatureMatrix& features,
                                  const PrototypeModel& model,
                                  const Hyperparams& h, const Forward& fw) {
  const size_t n = features.rows;
  const size_t m = features.cols;
  const size_t k = model.k;
  const double inv_n = 1.0 / static_cast<double>(n);
  const GroupSizes sizes = CountGroups(features);
  ModelGradient grad;
  grad.prototypes.assign(k * m, 0.0);
  grad.weights.assign(k, 0.0);
  std::vector<double> gap_sign(k);
  for (size_t j = 0; j < k; ++j) gap_sign[j] = Sign(fw.group_gap[j]);

  std::vector<double> d_assign(k);
  std::vector<double> residual(m);
  for (size_t r = 0; r < n; ++r) {
    const double* a = &fw.assign[r * k];
    const auto xr = features.row(r);
    for (size_t c = 0; c < m; ++c) residual[c] = fw.recon[r * m + c] - xr[c];
    const double err_sign = Sign(fw.estimate[r] - features.y[r]);
    const double group_scale =
        features.is_protected[r] ? 1.0 / sizes.plus : -1.0 / sizes.minus;

    // dL/dM[r, j].
    double mean_d = 0.0;
    for (size_t j = 0; j < k; ++j) {
      const auto v = model.prototype(j);
      double dot = 0.0;
      for (size_t c = 0; c < m; ++c) dot += residual[c] * v[c];
      d_assign[j] = h.a_x * 2.0 * inv_n * dot +
                    h.a_y * inv_n * err_sign * model.weights[j] +
                    h.a_z * gap_sign[j] * group_scale;
      mean_d += a[j] * d_assign[j];
    }
    for (size_t j = 0; j < k; ++j) {
      // Through the softmax logit -|x - v_j|^2 and directly through x_hat.
      const double d_logit = a[j] * (d_assign[j] - mean_d);
      const auto v = model.prototype(j);
      double* g = &grad.prototypes[j * m];
      for (size_t c = 0; c < m; ++c) {
        g[c] += d_logit * 2.0 * (xr[c] - v[c]) +
                h.a_x * 2.0 * inv_n * a[j] * residual[c];
      }
      grad.weights[j] += h.a_y * inv_n * err_sign * a[j];
    }
  }
  return grad;
}

}  // namespace internal

inline absl::StatusOr<ModelGradient> Gradient(const FeatureMatrix& features,
                                              const PrototypeModel& model,
                                              const Hyperparams& h) {
  FAIRRANK_RETURN_IF_ERROR(ValidateHyperparams(h));
  FAIRRANK_RETURN_IF_ERROR(ValidateFeatures(features));
  FAIRRANK_RETURN_IF_ERROR(internal::CheckDimensions(features, model));
  return internal::BackwardPass(features, model, h,
                                internal::RunForward(features, model));
}

// Mean absolute difference, with estimates clamped to [0, 1].
inline absl::StatusOr<double> AccuracyScoreDiff(std::span<const double> y,
                                                std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) {
    return absl::InvalidArgumentError(internal::StrCat(
        "length mismatch: ", y.size(), " vs ", y_hat.size()));
  }
  if (y.empty()) return 0.0;
  double sum = 0.0;
  for (size_t r = 0; r < y.size(); ++r) {
    sum += std::fabs(y[r] - std::clamp(y_hat[r], 0.0, 1.0));
  }
  return sum / static_cast<double>(y.size());
}

struct ModelOutput {
  std::vector<double> estimates;
  Ranking ranking;
};

inline absl::StatusOr<ModelOutput> ApplyModel(const FeatureMatrix& features,
                                              const PrototypeModel& model) {
  FAIRRANK_RETURN_IF_ERROR(internal::CheckDimensions(features, model));
  ModelOutput out;
  const std::vector<double> assign = internal::Assignments(features, model);
  out.estimates.assign(features.rows, 0.0);
  for (size_t r = 0; r < features.rows; ++r) {
    for (size_t j = 0; j < model.k; ++j) {
      out.estimates[r] += assign[r * model.k + j] * model.weights[j];
    }
  }
  FAIRRANK_ASSIGN_OR_RETURN(
      out.ranking, RankByScores(out.estimates, features.ids, features.is_protected));
  return out;
}

// Prototypes start at K distinct rows drawn with the seed; weights at 0.5.
inline absl::StatusOr<PrototypeModel> InitialModel(const FeatureMatrix& features,
                                                   size_t k, uint64_t seed) {
  if (k < 1) return absl::InvalidArgumentError("K must be >= 1");
  if (k > features.rows) {
    return absl::InvalidArgumentError(internal::StrCat(
        "K = ", k, " exceeds the number of rows (", features.rows, ")"));
  }
  std::vector<size_t> rows(features.rows);
  std::iota(rows.begin(), rows.end(), size_t{0});
  Rng rng(seed);
  for (size_t j = 0; j < k; ++j) {
    const size_t pick = j + static_cast<size_t>(rng.Below(rows.size() - j));
    std::swap(rows[j], rows[pick]);
  }
  PrototypeModel model;
  model.k = k;
  model.m = features.cols;
  model.prototypes.reserve(k * features.cols);
  for (size_t j = 0; j < k; ++j) {
    const auto source = features.row(rows[j]);
    model.prototypes.insert(model.prototypes.end(), source.begin(), source.end());
  }
  model.weights.assign(k, 0.5);
  return model;
}

struct TraceRecord {
  int64_t iter = 0;
  double loss = 0.0;
  LossTerms terms;
  double rnd = 0.0;
  double rkl = 0.0;
  std::optional<double> rrd;
  double score_diff = 0.0;
};

struct TrainResult {
  PrototypeModel model;  // the state described by trace.back()
  std::vector<TraceRecord> trace;
};

// Full-batch gradient descent. Record t describes the model after t updates;
// at most max_iters records are produced.
inline absl::StatusOr<TrainResult> Train(const FeatureMatrix& features,
                                         const Hyperparams& h) {
  FAIRRANK_RETURN_IF_ERROR(ValidateHyperparams(h));
  FAIRRANK_RETURN_IF_ERROR(ValidateFeatures(features));
  FAIRRANK_ASSIGN_OR_RETURN(PrototypeModel model,
                            InitialModel(features, h.k, h.seed));
  TrainResult result;
  for (int64_t iter = 0; iter < h.max_iters; ++iter) {
    const internal::Forward fw = internal::RunForward(features, model);
    TraceRecord record;
    record.iter = iter;
    record.terms = fw.losses;
    record.loss = CombineLosses(fw.losses, h);
    if (!std::isfinite(record.loss)) {
      return absl::OutOfRangeError(internal::StrCat(
          "training diverged at iteration ", iter,
          " (non-finite loss); lower the learning rate"));
    }
    FAIRRANK_ASSIGN_OR_RETURN(
        Ranking ranking,
        RankByScores(fw.estimate, features.ids, features.is_protected));
    FAIRRANK_ASSIGN_OR_RETURN(FairnessReport report,
                              ComputeFairnessReport(ranking, h.step));
    record.rnd = report.rnd;
    record.rkl = report.rkl;
    record.rrd = report.rrd;
    FAIRRANK_ASSIGN_OR_RETURN(record.score_diff,
                              AccuracyScoreDiff(features.y, fw.estimate));
    result.trace.push_back(record);

    if (iter > 0 && h.early_stop_rel_tol > 0.0) {
      const double prev = result.trace[result.trace.size() - 2].loss;
      const double change =
          std::fabs(record.loss - prev) / std::max(std::fabs(prev), 1e-300);
      if (change < h.early_stop_rel_tol) break;
    }
    if (iter + 1 == h.max_iters) break;

    const ModelGradient grad = internal::BackwardPass(features, model, h, fw);
    for (size_t q = 0; q < model.prototypes.size(); ++q) {
      model.prototypes[q] -= h.learning_rate * grad.prototypes[q];
    }
    for (size_t j = 0; j < model.k; ++j) {
      model.weights[j] -= h.learning_rate * grad.weights[j];
    }
  }
  result.model = std::move(model);
  return result;
}

inline std::string TraceToCsv(const std::vector<TraceRecord>& trace) {
  std::string out = "iter,L,L_x,L_y,L_z,rnd,rkl,rrd,score_diff\n";
  for (const TraceRecord& r : trace) {
    internal::StrAppend(&out, r.iter, ",", FormatReal(r.loss), ",",
                    FormatReal(r.terms.l_x), ",", FormatReal(r.terms.l_y), ",",
                    FormatReal(r.terms.l_z), ",", FormatReal(r.rnd), ",",
                    FormatReal(r.rkl), ",", r.rrd ? FormatReal(*r.rrd) : "", ",",
                    FormatReal(r.score_diff), "\n");
  }
  return out;
}

inline std::string ModelToJson(const PrototypeModel& model, const Hyperparams& h) {
  std::string out =
      internal::StrCat("{\n  \"K\": ", model.k, ",\n  \"m\": ", model.m,
                   ",\n  \"prototypes\": [");
  for (size_t j = 0; j < model.k; ++j) {
    internal::StrAppend(&out, j == 0 ? "\n    [" : ",\n    [");
    for (size_t c = 0; c < model.m; ++c) {
      internal::StrAppend(&out, c == 0 ? "" : ", ",
                      FormatReal(model.prototypes[j * model.m + c]));
    }
    internal::StrAppend(&out, "]");
  }
  internal::StrAppend(&out, "\n  ],\n  \"score_weights\": [");
  for (size_t j = 0; j < model.k; ++j) {
    internal::StrAppend(&out, j == 0 ? "" : ", ", FormatReal(model.weights[j]));
  }
  internal::StrAppend(
      &out, "],\n  \"hyperparams\": {\"a_x\": ", FormatReal(h.a_x),
      ", \"a_y\": ", FormatReal(h.a_y), ", \"a_z\": ", FormatReal(h.a_z),
      ", \"k\": ", h.k, ", \"learning_rate\": ", FormatReal(h.learning_rate),
      ", \"max_iters\": ", h.max_iters,
      ", \"early_stop_rel_tol\": ", FormatReal(h.early_stop_rel_tol),
      ", \"step\": ", h.step, "},\n  \"seed\": ", h.seed, "\n}\n");
  return out;
}

}  // namespace fairrank

#endif  // FAIRRANK_FAIROPT_H_
