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

#include "fairrank/fairopt.h"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <gmock/gmock.h>
#include <gtest/gtest.h>
#include "nlohmann/json.hpp"
#include "fairrank/rng.h"
#include "test_fixtures.h"

namespace fairrank {
namespace {

using ::fairrank::testing::CheckGradient;
using ::fairrank::testing::LoadBiasedFixture;
using ::fairrank::testing::RandomFeatures;
using ::fairrank::testing::RandomModel;
using ::testing::ElementsAre;
using ::testing::HasSubstr;

FeatureMatrix OneDim(std::vector<double> x, std::vector<double> y,
                     std::vector<bool> flags) {
  FeatureMatrix f;
  f.rows = x.size();
  f.cols = 1;
  f.x = std::move(x);
  f.y = std::move(y);
  f.is_protected = std::move(flags);
  for (size_t r = 0; r < f.rows; ++r) f.ids.push_back(std::to_string(r + 1));
  return f;
}

PrototypeModel OneDimModel(std::vector<double> v, std::vector<double> w) {
  PrototypeModel model;
  model.k = v.size();
  model.m = 1;
  model.prototypes = std::move(v);
  model.weights = std::move(w);
  return model;
}

// x = [0, 1], y = [0, 1], v = [0, 1], w = [0, 1]; the first point is protected.
FeatureMatrix TwoPoint() { return OneDim({0, 1}, {0, 1}, {true, false}); }
PrototypeModel TwoPointModel() { return OneDimModel({0, 1}, {0, 1}); }

TEST(SoftAssignmentsTest, SinglePrototype) {
  const auto m = *SoftAssignments(OneDim({0.1, 0.7, 0.3}, {0, 0, 0}, {true, false, true}),
                                  OneDimModel({0.4}, {1}));
  EXPECT_THAT(m, ElementsAre(1.0, 1.0, 1.0));
}

TEST(SoftAssignmentsTest, Equidistant) {
  const auto m = *SoftAssignments(OneDim({0.5}, {0}, {true}), OneDimModel({0, 1}, {0, 0}));
  EXPECT_DOUBLE_EQ(m[0], 0.5);
  EXPECT_DOUBLE_EQ(m[1], 0.5);
}

TEST(SoftAssignmentsTest, KnownValues) {
  const auto m = *SoftAssignments(OneDim({0}, {0}, {true}), OneDimModel({0, 1}, {0, 0}));
  EXPECT_NEAR(m[0], 0.731058578630005, 1e-6);
  EXPECT_NEAR(m[1], 0.268941421369995, 1e-6);
}

TEST(SoftAssignmentsTest, FarPointsDoNotOverflow) {
  const auto m = *SoftAssignments(OneDim({1e3}, {0}, {true}), OneDimModel({0, 1}, {0, 0}));
  EXPECT_EQ(m[0], 0.0);
  EXPECT_EQ(m[1], 1.0);
}

TEST(SoftAssignmentsTest, DimensionMismatch) {
  Rng rng(1);
  PrototypeModel model = RandomModel(rng, 3, 2);
  EXPECT_TRUE(absl::IsInvalidArgument(
      SoftAssignments(OneDim({0, 1}, {0, 1}, {true, false}), model).status()));
}

TEST(SoftAssignmentsTest, RowsAreDistributions) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 1 + rng.Below(40), m = 1 + rng.Below(5), k = 1 + rng.Below(12);
    FeatureMatrix f = RandomFeatures(rng, n, m);
    PrototypeModel model = RandomModel(rng, k, m);
    for (double& v : model.prototypes) v = (v - 0.5) * 8;
    const auto assign = *SoftAssignments(f, model);
    for (size_t r = 0; r < n; ++r) {
      double total = 0;
      for (size_t j = 0; j < k; ++j) {
        EXPECT_GE(assign[r * k + j], 0.0);
        total += assign[r * k + j];
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(LossesTest, TwoPointGolden) {
  const LossTerms terms = *ComputeLosses(TwoPoint(), TwoPointModel());
  EXPECT_NEAR(terms.l_x, 0.0723294881285133, 1e-9);
  EXPECT_NEAR(terms.l_y, 0.268941421369995, 1e-9);
  EXPECT_NEAR(terms.l_z, 0.924234314520020, 1e-9);
}

TEST(LossesTest, PrototypesAtDataPoints) {
  // Pairwise distances of 10, so softmax leakage is about exp(-100).
  const FeatureMatrix f = OneDim({0, 10, 20, 30}, {0.1, 0.9, 0.4, 0.6},
                                 {true, false, true, false});
  const LossTerms terms = *ComputeLosses(f, OneDimModel({0, 10, 20, 30}, {0.1, 0.9, 0.4, 0.6}));
  EXPECT_LT(terms.l_x, 1e-3);
  EXPECT_LT(terms.l_y, 1e-3);
}

TEST(LossesTest, IdenticalGroupsHaveNoParityLoss) {
  Rng rng(41);
  FeatureMatrix half = RandomFeatures(rng, 12, 3);
  FeatureMatrix f = half;
  for (size_t r = 0; r < half.rows; ++r) {
    f.is_protected[r] = true;
    const auto row = half.row(r);
    f.x.insert(f.x.end(), row.begin(), row.end());
    f.is_protected.push_back(false);
    f.y.push_back(half.y[r]);
    f.ids.push_back("dup" + std::to_string(r));
  }
  f.rows *= 2;
  EXPECT_NEAR(ComputeLosses(f, RandomModel(rng, 5, 3))->l_z, 0.0, 1e-15);
}

TEST(LossesTest, ParityLossBounded) {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    FeatureMatrix f = RandomFeatures(rng, 20, 2);
    PrototypeModel model = RandomModel(rng, 6, 2);
    for (double& v : model.prototypes) v = (v - 0.5) * 20;
    const LossTerms terms = *ComputeLosses(f, model);
    EXPECT_GE(terms.l_x, 0.0);
    EXPECT_GE(terms.l_y, 0.0);
    EXPECT_GE(terms.l_z, 0.0);
    EXPECT_LE(terms.l_z, 2.0 + 1e-12);
  }
}

TEST(LossesTest, EmptyGroupIsAnError) {
  EXPECT_FALSE(ComputeLosses(OneDim({0, 1}, {0, 1}, {true, true}), TwoPointModel()).ok());
}

TEST(LossesTest, TranslationEquivariance) {
  Rng rng(43);
  FeatureMatrix f = RandomFeatures(rng, 25, 3);
  PrototypeModel model = RandomModel(rng, 4, 3);
  const std::vector<double> shift = {3.5, -2.0, 0.25};
  FeatureMatrix f2 = f;
  PrototypeModel model2 = model;
  for (size_t q = 0; q < f2.x.size(); ++q) f2.x[q] += shift[q % 3];
  for (size_t q = 0; q < model2.prototypes.size(); ++q) model2.prototypes[q] += shift[q % 3];
  const auto a = *SoftAssignments(f, model);
  const auto b = *SoftAssignments(f2, model2);
  for (size_t q = 0; q < a.size(); ++q) EXPECT_NEAR(a[q], b[q], 1e-12);
  const LossTerms ta = *ComputeLosses(f, model);
  const LossTerms tb = *ComputeLosses(f2, model2);
  EXPECT_NEAR(ta.l_x, tb.l_x, 1e-12);
  EXPECT_NEAR(ta.l_y, tb.l_y, 1e-12);
  EXPECT_NEAR(ta.l_z, tb.l_z, 1e-12);
}

TEST(TotalLossTest, WeightsCombineLinearly) {
  const FeatureMatrix f = TwoPoint();
  const PrototypeModel model = TwoPointModel();
  const LossTerms terms = *ComputeLosses(f, model);
  Hyperparams h;
  h.a_x = h.a_y = h.a_z = 1.0;
  EXPECT_DOUBLE_EQ(*TotalLoss(f, model, h), terms.l_x + terms.l_y + terms.l_z);
  Hyperparams doubled = h;
  doubled.a_x = doubled.a_y = doubled.a_z = 2.0;
  EXPECT_DOUBLE_EQ(*TotalLoss(f, model, doubled), 2.0 * *TotalLoss(f, model, h));
}

TEST(TotalLossTest, ParityOnlyOnBalancedFixture) {
  // Mirror-image groups around the single midpoint prototype pair.
  const FeatureMatrix f = OneDim({0.2, 0.8, 0.2, 0.8}, {0, 1, 0, 1}, {true, true, false, false});
  Hyperparams h;
  h.a_x = 0;
  h.a_y = 0;
  h.a_z = 1;
  EXPECT_EQ(*TotalLoss(f, OneDimModel({0.1, 0.9}, {0, 1}), h), 0.0);
}

TEST(TotalLossTest, RejectsAllZeroWeights) {
  Hyperparams h;
  h.a_x = h.a_y = h.a_z = 0.0;
  EXPECT_FALSE(TotalLoss(TwoPoint(), TwoPointModel(), h).ok());
}

TEST(GradientTest, MatchesFiniteDifferences) {
  Rng rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const FeatureMatrix f = RandomFeatures(rng, 30, 3);
    const PrototypeModel model = RandomModel(rng, 4, 3);
    Hyperparams h;
    h.a_x = 0.5 + rng.Uniform();
    h.a_y = 0.5 + rng.Uniform();
    h.a_z = 0.5 + rng.Uniform();
    const auto check = CheckGradient(f, model, h);
    EXPECT_GT(check.compared, 10);
    EXPECT_LT(check.worst_relative_error, 1e-4) << "trial " << trial;
  }
}

TEST(GradientTest, ReconstructionOnlyLeavesWeightsAlone) {
  Rng rng(52);
  Hyperparams h;
  h.a_x = 1;
  h.a_y = 0;
  h.a_z = 0;
  const auto grad = *Gradient(RandomFeatures(rng, 15, 2), RandomModel(rng, 3, 2), h);
  for (double g : grad.weights) EXPECT_EQ(g, 0.0);
  EXPECT_GT(std::fabs(grad.prototypes[0]), 0.0);
}

TEST(GradientTest, StationaryAtSinglePrototypeOptimum) {
  // One prototype: L_x is minimal at the feature mean and L_y on any point
  // strictly between the two middle scores.
  const FeatureMatrix f = OneDim({0.1, 0.5, 0.6, 1.0}, {0.2, 0.4, 0.6, 0.9},
                                 {true, false, true, false});
  Hyperparams h;
  h.a_x = h.a_y = h.a_z = 1;
  const auto grad = *Gradient(f, OneDimModel({0.55}, {0.5}), h);
  EXPECT_LT(std::hypot(grad.prototypes[0], grad.weights[0]), 1e-6);
}

TEST(AccuracyScoreDiffTest, Examples) {
  EXPECT_EQ(*AccuracyScoreDiff(std::vector<double>{0.3, 0.6}, std::vector<double>{0.3, 0.6}), 0.0);
  EXPECT_EQ(*AccuracyScoreDiff(std::vector<double>{0, 1}, std::vector<double>{1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(
      *AccuracyScoreDiff(std::vector<double>{0.2, 0.8}, std::vector<double>{0.5, 0.5}), 0.3);
  EXPECT_DOUBLE_EQ(
      *AccuracyScoreDiff(std::vector<double>{0.0, 1.0}, std::vector<double>{-2.0, 3.0}), 0.0);
  EXPECT_FALSE(AccuracyScoreDiff(std::vector<double>{0.0}, std::vector<double>{}).ok());
}

TEST(ApplyModelTest, ConstantWeightsGiveConstantEstimates) {
  Rng rng(61);
  FeatureMatrix f = RandomFeatures(rng, 12, 2);
  PrototypeModel model = RandomModel(rng, 3, 2);
  model.weights.assign(3, 0.5);
  const auto out = *ApplyModel(f, model);
  for (double e : out.estimates) EXPECT_NEAR(e, 0.5, 1e-15);
}

TEST(ApplyModelTest, ExactWeightsGiveIdOrderWhenTied) {
  const FeatureMatrix f = OneDim({0.9, 0.1, 0.5}, {0.2, 0.3, 0.4}, {true, false, false});
  const auto out = *ApplyModel(f, OneDimModel({0.3}, {0.5}));
  EXPECT_THAT(out.estimates, ElementsAre(0.5, 0.5, 0.5));
  std::vector<std::string> ids;
  for (const Item& item : out.ranking.items()) ids.push_back(item.id);
  EXPECT_THAT(ids, ElementsAre("1", "2", "3"));
}

TEST(ApplyModelTest, ReconstructsGroundTruthRanking) {
  const FeatureMatrix f = OneDim({0, 10, 20, 30}, {0.1, 0.9, 0.4, 0.6},
                                 {true, false, true, false});
  const auto out = *ApplyModel(f, OneDimModel({0, 10, 20, 30}, {0.1, 0.9, 0.4, 0.6}));
  std::vector<std::string> ids;
  for (const Item& item : out.ranking.items()) ids.push_back(item.id);
  EXPECT_THAT(ids, ElementsAre("2", "4", "3", "1"));
}

TEST(ApplyModelTest, RowPermutationPermutesEstimates) {
  Rng rng(62);
  const FeatureMatrix f = RandomFeatures(rng, 20, 3);
  const PrototypeModel model = RandomModel(rng, 5, 3);
  std::vector<size_t> perm(f.rows);
  std::iota(perm.begin(), perm.end(), size_t{0});
  rng.Shuffle(std::span<size_t>(perm));
  FeatureMatrix g = f;
  for (size_t r = 0; r < f.rows; ++r) {
    for (size_t c = 0; c < f.cols; ++c) g.x[r * f.cols + c] = f.x[perm[r] * f.cols + c];
    g.is_protected[r] = f.is_protected[perm[r]];
    g.y[r] = f.y[perm[r]];
    g.ids[r] = f.ids[perm[r]];
  }
  const auto a = *ApplyModel(f, model);
  const auto b = *ApplyModel(g, model);
  for (size_t r = 0; r < f.rows; ++r) EXPECT_EQ(b.estimates[r], a.estimates[perm[r]]);
  EXPECT_EQ(a.ranking, b.ranking);
}

TEST(TrainTest, SinglePrototypeHasNoParityLoss) {
  Hyperparams h;
  h.k = 1;
  h.max_iters = 50;
  const auto result = Train(LoadBiasedFixture().features, h);
  ASSERT_TRUE(result.ok());
  for (const TraceRecord& r : result->trace) EXPECT_EQ(r.terms.l_z, 0.0);
}

TEST(TrainTest, DeterministicAndConsistent) {
  const FeatureMatrix f = LoadBiasedFixture().features;
  Hyperparams h;
  h.max_iters = 80;
  const auto a = Train(f, h);
  const auto b = Train(f, h);
  ASSERT_TRUE(a.ok());
  EXPECT_EQ(TraceToCsv(a->trace), TraceToCsv(b->trace));
  EXPECT_EQ(a->model.prototypes, b->model.prototypes);
  EXPECT_EQ(a->trace.size(), 80u);
  for (size_t t = 0; t < a->trace.size(); ++t) {
    const TraceRecord& r = a->trace[t];
    EXPECT_EQ(r.iter, static_cast<int64_t>(t));
    EXPECT_NEAR(r.loss, h.a_x * r.terms.l_x + h.a_y * r.terms.l_y + h.a_z * r.terms.l_z, 1e-9);
  }
}

TEST(TrainTest, LossDecreasesAtCalibratedRate) {
  Hyperparams h;  // defaults: K = 10, A = (0.01, 1, 5), learning rate 0.01
  h.max_iters = 300;
  const auto result = Train(LoadBiasedFixture().features, h);
  ASSERT_TRUE(result.ok());
  EXPECT_LE(result->trace.back().loss, result->trace.front().loss);
}

TEST(TrainTest, ReturnedModelMatchesLastRecord) {
  const FeatureMatrix f = LoadBiasedFixture().features;
  Hyperparams h;
  h.max_iters = 25;
  const auto result = Train(f, h);
  EXPECT_NEAR(*TotalLoss(f, result->model, h), result->trace.back().loss, 1e-12);
}

TEST(TrainTest, EarlyStop) {
  Hyperparams h;
  h.max_iters = 5000;
  h.early_stop_rel_tol = 1e-3;
  const auto result = Train(LoadBiasedFixture().features, h);
  ASSERT_TRUE(result.ok());
  EXPECT_LT(result->trace.size(), 5000u);
}

TEST(TrainTest, TooManyPrototypes) {
  Hyperparams h;
  h.k = 5;
  EXPECT_TRUE(absl::IsInvalidArgument(Train(TwoPoint(), h).status()));
}

TEST(TrainTest, DivergenceNamesIteration) {
  Hyperparams h;
  h.learning_rate = 1e300;
  h.max_iters = 20;
  const auto status = Train(LoadBiasedFixture().features, h).status();
  ASSERT_FALSE(status.ok());
  EXPECT_TRUE(absl::IsOutOfRange(status));
  EXPECT_THAT(std::string(status.message()), HasSubstr("iteration"));
}

TEST(InitialModelTest, DistinctRows) {
  const FeatureMatrix f = LoadBiasedFixture().features;
  const PrototypeModel model = *InitialModel(f, 10, 7);
  for (size_t a = 0; a < 10; ++a) {
    for (size_t b = a + 1; b < 10; ++b) {
      const auto pa = model.prototype(a);
      const auto pb = model.prototype(b);
      EXPECT_FALSE(std::equal(pa.begin(), pa.end(), pb.begin()));
    }
  }
  EXPECT_THAT(model.weights, ::testing::Each(0.5));
}

TEST(SerializationTest, TraceCsvHeader) {
  TraceRecord r;
  r.iter = 3;
  r.loss = 1.0;
  r.rrd = std::nullopt;
  EXPECT_EQ(TraceToCsv({r}),
            "iter,L,L_x,L_y,L_z,rnd,rkl,rrd,score_diff\n"
            "3,1.000000,0.000000,0.000000,0.000000,0.000000,0.000000,,0.000000\n");
}

TEST(SerializationTest, ModelJsonFields) {
  Hyperparams h;
  h.seed = 77;
  const auto json = nlohmann::json::parse(ModelToJson(TwoPointModel(), h));
  EXPECT_EQ(json["K"], 2);
  EXPECT_EQ(json["m"], 1);
  EXPECT_EQ(json["prototypes"].size(), 2u);
  EXPECT_EQ(json["prototypes"][1][0], 1.0);
  EXPECT_EQ(json["score_weights"].size(), 2u);
  EXPECT_EQ(json["seed"], 77);
  EXPECT_DOUBLE_EQ(json["hyperparams"]["a_z"].get<double>(), 5.0);
}

}  // namespace
}  // namespace fairrank
