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

#ifndef FAIRRANK_TOOLS_CLI_COMMANDS_H_
#define FAIRRANK_TOOLS_CLI_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "fairrank/internal/strings.h"
#include "fairrank/fairrank.h"

namespace fairrank::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

// Files staged by a command; nothing reaches its final path unless every
// file was written.
class OutputSet {
 public:
  void Stage(std::filesystem::path path, std::string contents) {
    files_.emplace_back(std::move(path), std::move(contents));
  }

  absl::Status Commit() {
    std::vector<std::filesystem::path> temps;
    auto cleanup = [&] {
      std::error_code ignored;
      for (const auto& t : temps) std::filesystem::remove(t, ignored);
    };
    for (const auto& [path, contents] : files_) {
      std::filesystem::path tmp = path;
      tmp += ".tmp";
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) {
        cleanup();
        return absl::PermissionDeniedError(
            internal::StrCat("cannot write '", tmp.string(), "'"));
      }
      temps.push_back(tmp);
      out << contents;
      out.close();
      if (!out) {
        cleanup();
        return absl::DataLossError(internal::StrCat("short write to '", tmp.string(), "'"));
      }
    }
    for (size_t f = 0; f < files_.size(); ++f) {
      std::error_code ec;
      std::filesystem::rename(temps[f], files_[f].first, ec);
      if (ec) {
        cleanup();
        return absl::PermissionDeniedError(
            internal::StrCat("cannot rename into '", files_[f].first.string(), "'"));
      }
    }
    return absl::OkStatus();
  }

  std::vector<std::string> paths() const {
    std::vector<std::string> out;
    for (const auto& f : files_) out.push_back(f.first.string());
    return out;
  }

 private:
  std::vector<std::pair<std::filesystem::path, std::string>> files_;
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline int Fail(const Streams& io, int code, const absl::Status& status) {
  io.err << "error: " << status.message() << "\n";
  return code;
}

// Errors while reading user-supplied inputs: unknown columns and malformed
// files are usage errors, problems with the data itself are domain errors.
inline int InputFailure(const Streams& io, const absl::Status& status) {
  const bool usage = absl::IsNotFound(status) || absl::IsInvalidArgument(status);
  return Fail(io, usage ? kExitUsage : kExitDomain, status);
}

inline int Emit(const Streams& io, OutputSet& outputs) {
  if (absl::Status s = outputs.Commit(); !s.ok()) return Fail(io, kExitDomain, s);
  for (const std::string& path : outputs.paths()) io.out << "wrote " << path << "\n";
  return kExitOk;
}

// Dataset flags shared by `rank` and `optimize`.
struct DatasetFlags {
  std::string dataset;
  std::string id_col = "id";
  std::string protected_col;
  std::optional<std::string> protected_equals;
  std::optional<double> protected_less_than;
  std::optional<std::string> score_col;
  std::vector<std::string> score_sum;
  bool drop_incomplete_rows = false;
};

inline void AddDatasetFlags(CLI::App* cmd, DatasetFlags& flags) {
  cmd->add_option("dataset", flags.dataset, "Input table (CSV with header)")
      ->required();
  cmd->add_option("--id-col", flags.id_col, "Column holding unique row ids")
      ->capture_default_str();
  cmd->add_option("--protected-col", flags.protected_col,
                  "Column defining protected-group membership")
      ->required();
  auto* eq = cmd->add_option("--protected-equals", flags.protected_equals,
                             "Rows whose protected column equals VALUE are protected");
  auto* lt = cmd->add_option("--protected-less-than", flags.protected_less_than,
                             "Rows whose numeric protected column is < VALUE are protected");
  eq->excludes(lt);
  auto* sc = cmd->add_option("--score-col", flags.score_col,
                             "Rank by this numeric column, descending");
  auto* ss = cmd->add_option("--score-sum", flags.score_sum,
                             "Rank by the mean of min-max normalized columns")
                 ->delimiter(',');
  sc->excludes(ss);
  cmd->add_flag("--drop-incomplete-rows", flags.drop_incomplete_rows,
                "Drop rows with missing cells instead of failing");
}

struct LoadedDataset {
  DatasetTable table;
  ProtectedGroup group;
  ScoreSpec score_spec;
};

// Returns an exit code on failure.
inline std::variant<LoadedDataset, int> LoadDataset(const Streams& io,
                                                    const DatasetFlags& flags) {
  if (flags.protected_equals.has_value() == flags.protected_less_than.has_value()) {
    io.err << "error: give exactly one of --protected-equals, --protected-less-than\n";
    return kExitUsage;
  }
  if (flags.score_col.has_value() == !flags.score_sum.empty()) {
    io.err << "error: give exactly one of --score-col, --score-sum\n";
    return kExitUsage;
  }
  LoadedDataset data;
  auto table = LoadTable(flags.dataset, flags.id_col,
                         LoadOptions{flags.drop_incomplete_rows});
  if (!table.ok()) return InputFailure(io, table.status());
  data.table = *std::move(table);
  if (!data.table.dropped_rows.empty()) {
    io.out << "dropped " << data.table.dropped_rows.size()
           << " incomplete rows\n";
  }
  data.score_spec = flags.score_col ? ScoreSpec::Single(*flags.score_col)
                                    : ScoreSpec::EqualWeightSum(flags.score_sum);
  if (data.table.Find(flags.protected_col) == nullptr) {
    return InputFailure(io, absl::NotFoundError(internal::StrCat(
                                "unknown column '", flags.protected_col, "'")));
  }
  for (const std::string& col : data.score_spec.columns) {
    if (data.table.Find(col) == nullptr) {
      return InputFailure(
          io, absl::NotFoundError(internal::StrCat("unknown column '", col, "'")));
    }
  }
  ProtectedSpec spec{flags.protected_col,
                     flags.protected_equals
                         ? ProtectedPredicate::Equals(*flags.protected_equals)
                         : ProtectedPredicate::LessThan(*flags.protected_less_than)};
  auto group = DeriveProtected(data.table, spec);
  if (!group.ok()) return Fail(io, kExitUsage, group.status());
  data.group = *std::move(group);
  return data;
}

inline int RunCli(const std::vector<std::string>& args, const Streams& io) {
  CLI::App app{
      "fairrank: statistical-parity measures for rankings (rND, rKL, rRD), "
      "biased ranking generation, and fairness-aware re-scoring.\n\n"
      "Ranking CSV: header id,protected,score; protected is 0/1; score may be "
      "empty; rows in rank order (first row = position 1).",
      "fairrank"};
  app.require_subcommand(1);

  // measure
  std::string measure_input;
  int measure_step = kDefaultStep;
  bool allow_majority = false;
  std::optional<std::string> measure_out;
  auto* measure = app.add_subcommand(
      "measure",
      "Compute rND, rKL and rRD of a ranking CSV. Prints the JSON report "
      "{n, n_plus, step, rnd, rkl, rrd, normalizers, per_cutoff} to stdout or --out.");
  measure->add_option("ranking", measure_input, "Ranking CSV")->required();
  measure->add_option("--step", measure_step, "Cutoff step (cutoffs step, 2*step, ..., N)")
      ->capture_default_str();
  measure->add_flag("--allow-majority-rrd", allow_majority,
                    "Compute rRD even when the protected group is the majority");
  measure->add_option("--out", measure_out, "Write the JSON report here");

  // generate
  std::optional<int64_t> gen_n, gen_n_plus;
  std::optional<std::string> gen_base;
  double gen_f = 0.5;
  uint64_t gen_seed = 1;
  std::optional<std::string> gen_out;
  auto* generate = app.add_subcommand(
      "generate",
      "Write a ranking of controlled unfairness. With --n/--n-plus the base is a "
      "seeded random permutation (ids p1.., q1..) and the output equals the "
      "sweep ranking for (f, seed); with --base the given ranking is reordered.");
  generate->add_option("--n", gen_n, "Number of items");
  generate->add_option("--n-plus", gen_n_plus, "Number of protected items");
  generate->add_option("--base", gen_base, "Base ranking CSV");
  generate->add_option("--f", gen_f, "Fairness probability in [0, 1]")
      ->capture_default_str();
  generate->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
  generate->add_option("--out", gen_out, "Output ranking CSV (default stdout)");

  // sweep
  int64_t sweep_n = 1000, sweep_n_plus = 200;
  std::string sweep_grid = "0:1:0.1";
  uint64_t sweep_seeds = 50;
  int sweep_step = kDefaultStep;
  int sweep_threads = 0;
  std::string sweep_out;
  std::optional<std::string> sweep_agg_out;
  auto* sweep = app.add_subcommand(
      "sweep",
      "Measure generated rankings over an f grid and seeds 1..S. Writes rows "
      "f,seed,rnd,rkl,rrd and per-f means f,runs,mean_rnd,mean_rkl,mean_rrd "
      "(rrd empty where inapplicable).");
  sweep->add_option("--n", sweep_n, "Number of items")->capture_default_str();
  sweep->add_option("--n-plus", sweep_n_plus, "Number of protected items")
      ->capture_default_str();
  sweep->add_option("--f-grid", sweep_grid,
                    "start:stop:step (inclusive) or comma list")
      ->capture_default_str();
  sweep->add_option("--seeds", sweep_seeds, "Seeds 1..S per grid point")
      ->capture_default_str();
  sweep->add_option("--step", sweep_step, "Cutoff step")->capture_default_str();
  sweep->add_option("--threads", sweep_threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  sweep->add_option("--out", sweep_out, "Per-run CSV")->required();
  sweep->add_option("--aggregate-out", sweep_agg_out,
                    "Per-f mean CSV (default: <out stem>_aggregate.csv)");

  // rank
  DatasetFlags rank_flags;
  std::optional<std::string> rank_out;
  auto* rank = app.add_subcommand(
      "rank",
      "Score a table (single column or equal-weight sum of min-max normalized "
      "columns), sort descending with ties by ascending id, and write a ranking CSV.");
  AddDatasetFlags(rank, rank_flags);
  rank->add_option("--out", rank_out, "Output ranking CSV (default stdout)");

  // optimize
  DatasetFlags opt_flags;
  std::vector<std::string> feature_cols;
  Hyperparams hp;
  std::string trace_out, model_out, ranking_out;
  auto* optimize = app.add_subcommand(
      "optimize",
      "Learn a prototype re-scoring minimizing A_x*L_x + A_y*L_y + A_z*L_z. "
      "Writes the trace CSV iter,L,L_x,L_y,L_z,rnd,rkl,rrd,score_diff, the model "
      "JSON {K, m, prototypes, score_weights, hyperparams, seed} and the "
      "re-ranked output as a ranking CSV.");
  AddDatasetFlags(optimize, opt_flags);
  optimize->add_option("--feature-cols", feature_cols,
                       "Feature columns (default: numeric columns other than "
                       "the id and protected columns)")
      ->delimiter(',');
  optimize->add_option("--k", hp.k, "Number of prototypes")->capture_default_str();
  optimize->add_option("--ax", hp.a_x, "Weight of L_x")->capture_default_str();
  optimize->add_option("--ay", hp.a_y, "Weight of L_y")->capture_default_str();
  optimize->add_option("--az", hp.a_z, "Weight of L_z")->capture_default_str();
  optimize->add_option("--lr", hp.learning_rate, "Learning rate")
      ->capture_default_str();
  optimize->add_option("--iters", hp.max_iters, "Maximum iterations")
      ->capture_default_str();
  optimize->add_option("--tol", hp.early_stop_rel_tol,
                       "Stop when the relative loss change drops below this (0 = off)")
      ->capture_default_str();
  optimize->add_option("--seed", hp.seed, "Prototype initialization seed")
      ->capture_default_str();
  optimize->add_option("--step", hp.step, "Cutoff step for traced measures")
      ->capture_default_str();
  optimize->add_option("--trace-out", trace_out, "Trace CSV")->required();
  optimize->add_option("--model-out", model_out, "Model JSON")->required();
  optimize->add_option("--ranking-out", ranking_out, "Re-ranked ranking CSV")
      ->required();

  std::vector<std::string> argv_storage = args;
  std::reverse(argv_storage.begin(), argv_storage.end());
  try {
    app.parse(argv_storage);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      io.out << (app.get_subcommands().empty() ? app.help()
                                               : app.get_subcommands().front()->help());
      return kExitOk;
    }
    io.err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (measure->parsed()) {
    if (measure_step < 1) {
      io.err << "error: --step must be >= 1\n";
      return kExitUsage;
    }
    auto ranking = ReadRankingCsv(measure_input);
    if (!ranking.ok()) return InputFailure(io, ranking.status());
    auto report = ComputeFairnessReport(*ranking, measure_step, allow_majority);
    if (!report.ok()) return Fail(io, kExitDomain, report.status());
    const std::string json = FairnessReportToJson(*report);
    std::ostream& summary = measure_out ? io.out : io.err;
    summary << "rND = " << FormatReal(report->rnd)
            << ", rKL = " << FormatReal(report->rkl) << ", rRD = "
            << (report->rrd ? FormatReal(*report->rrd)
                            : std::string("n/a (protected group is the majority; "
                                          "pass --allow-majority-rrd to override)"))
            << "\n";
    if (!measure_out) {
      io.out << json;
      return kExitOk;
    }
    OutputSet outputs;
    outputs.Stage(*measure_out, json);
    return Emit(io, outputs);
  }

  if (generate->parsed()) {
    const bool synthetic = gen_n.has_value() || gen_n_plus.has_value();
    if (synthetic == gen_base.has_value() ||
        (synthetic && !(gen_n.has_value() && gen_n_plus.has_value()))) {
      io.err << "error: give either both --n and --n-plus, or --base\n";
      return kExitUsage;
    }
    if (absl::Status s = ValidateFairnessProbability(gen_f); !s.ok()) {
      return Fail(io, kExitUsage, s);
    }
    absl::StatusOr<Ranking> result;
    if (synthetic) {
      auto base = RandomBaseRanking(*gen_n, *gen_n_plus, gen_seed);
      if (!base.ok()) return Fail(io, kExitUsage, base.status());
      result = GenerateUnfair(*base, GeneratorConfig{gen_f, SweepCellSeed(gen_f, gen_seed)});
    } else {
      auto base = ReadRankingCsv(*gen_base);
      if (!base.ok()) return InputFailure(io, base.status());
      result = GenerateUnfair(*base, GeneratorConfig{gen_f, gen_seed});
    }
    if (!result.ok()) return Fail(io, kExitDomain, result.status());
    const std::string csv = RankingToCsv(*result);
    if (!gen_out) {
      io.out << csv;
      return kExitOk;
    }
    OutputSet outputs;
    outputs.Stage(*gen_out, csv);
    return Emit(io, outputs);
  }

  if (sweep->parsed()) {
    auto grid = ParseFGrid(sweep_grid);
    if (!grid.ok()) return Fail(io, kExitUsage, grid.status());
    if (sweep_seeds < 1 || sweep_step < 1) {
      io.err << "error: --seeds and --step must be >= 1\n";
      return kExitUsage;
    }
    std::vector<uint64_t> seeds;
    for (uint64_t s = 1; s <= sweep_seeds; ++s) seeds.push_back(s);
    auto rows = Sweep(sweep_n, sweep_n_plus, *grid, seeds, sweep_step, sweep_threads);
    if (!rows.ok()) return Fail(io, kExitDomain, rows.status());
    const std::vector<SweepAggregate> agg = AggregateSweep(*rows);
    std::filesystem::path agg_path;
    if (sweep_agg_out) {
      agg_path = *sweep_agg_out;
    } else {
      const std::filesystem::path out_path(sweep_out);
      agg_path = out_path.parent_path() /
                 (out_path.stem().string() + "_aggregate" + out_path.extension().string());
    }
    OutputSet outputs;
    outputs.Stage(sweep_out, SweepToCsv(*rows));
    outputs.Stage(agg_path, SweepAggregateToCsv(agg));
    for (const SweepAggregate& a : agg) {
      io.out << "f = " << FormatReal(a.f) << "  mean rND = " << FormatReal(a.mean_rnd)
             << "  mean rKL = " << FormatReal(a.mean_rkl) << "  mean rRD = "
             << (a.mean_rrd ? FormatReal(*a.mean_rrd) : std::string("n/a")) << "\n";
    }
    return Emit(io, outputs);
  }

  if (rank->parsed()) {
    auto loaded = LoadDataset(io, rank_flags);
    if (auto* code = std::get_if<int>(&loaded)) return *code;
    const LoadedDataset& data = std::get<LoadedDataset>(loaded);
    auto ranking = ScoreAndRank(data.table, data.score_spec, data.group.flags);
    if (!ranking.ok()) return Fail(io, kExitDomain, ranking.status());
    io.out << "protected proportion = " << FormatReal(data.group.proportion)
           << " (" << ranking->n_plus() << " of " << ranking->n() << ")\n";
    const std::string csv = RankingToCsv(*ranking);
    if (!rank_out) {
      io.out << csv;
      return kExitOk;
    }
    OutputSet outputs;
    outputs.Stage(*rank_out, csv);
    return Emit(io, outputs);
  }

  if (optimize->parsed()) {
    auto loaded = LoadDataset(io, opt_flags);
    if (auto* code = std::get_if<int>(&loaded)) return *code;
    const LoadedDataset& data = std::get<LoadedDataset>(loaded);
    if (feature_cols.empty()) {
      for (const Column& col : data.table.columns) {
        if (col.type == ColumnType::kNumeric && col.name != data.table.id_column &&
            col.name != opt_flags.protected_col) {
          feature_cols.push_back(col.name);
        }
      }
    }
    for (const std::string& col : feature_cols) {
      if (data.table.Find(col) == nullptr) {
        return InputFailure(
            io, absl::NotFoundError(internal::StrCat("unknown column '", col, "'")));
      }
    }
    if (absl::Status s = ValidateHyperparams(hp); !s.ok()) {
      return Fail(io, kExitUsage, s);
    }
    auto scores = ComputeScores(data.table, data.score_spec);
    if (!scores.ok()) return Fail(io, kExitUsage, scores.status());
    auto features = BuildFeatureMatrix(data.table, feature_cols, data.group.flags, *scores);
    if (!features.ok()) return Fail(io, kExitDomain, features.status());
    auto trained = Train(*features, hp);
    if (!trained.ok()) return Fail(io, kExitDomain, trained.status());
    auto output = ApplyModel(*features, trained->model);
    if (!output.ok()) return Fail(io, kExitDomain, output.status());
    const TraceRecord& first = trained->trace.front();
    const TraceRecord& last = trained->trace.back();
    io.out << "iterations: " << trained->trace.size() << "\n"
           << "L:   " << FormatReal(first.loss) << " -> " << FormatReal(last.loss) << "\n"
           << "L_z: " << FormatReal(first.terms.l_z) << " -> "
           << FormatReal(last.terms.l_z) << "\n"
           << "rKL: " << FormatReal(first.rkl) << " -> " << FormatReal(last.rkl) << "\n";
    OutputSet outputs;
    outputs.Stage(trace_out, TraceToCsv(trained->trace));
    outputs.Stage(model_out, ModelToJson(trained->model, hp));
    outputs.Stage(ranking_out, RankingToCsv(output->ranking));
    return Emit(io, outputs);
  }
  return kExitUsage;
}

}  // namespace fairrank::cli

#endif  // FAIRRANK_TOOLS_CLI_COMMANDS_H_
