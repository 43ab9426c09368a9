// Copyright 2026 The QFree Authors
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

// Experiment plumbing: run configuration files, per-run artifacts, seed
// sweeps, table comparison, curve aggregation and the IGM analysis surface.
//
// Run directory layout:
//   config.txt     effective configuration (key = value)
//   metrics.csv    one row per logging interval
//   qtot.csv       single-step games only: learned Q_tot table
//   agent_q.csv    single-step games only: local Q_i rows at the initial step
//   checkpoint.bin final online parameters
//   manifest.txt   wall-clock timestamps (the only non-reproducible file)
// A sweep directory holds seed_<k>/ run directories plus summary.csv and
// curve.csv.

#ifndef QFREE_HARNESS_H_
#define QFREE_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qfree/factorization.h"
#include "qfree/joint_table.h"
#include "qfree/training.h"

namespace qfree {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---- Configuration ----

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

// Flat `key = value` text; `#` starts a comment. Throws ConfigError on
// malformed lines and repeated keys.
ConfigEntries ParseConfigText(std::string_view text);
ConfigEntries ReadConfigFile(const std::filesystem::path& path);

struct RunConfig {
  std::string env = "matrix3";
  TrainConfig train = DefaultTrainConfig("matrix3", Variant::kQFree);
  std::filesystem::path out_dir = "runs";
  std::size_t seeds = 20;  // sweep runs seeds train.seed .. train.seed + seeds - 1
  std::size_t jobs = 1;    // concurrent sweep workers
};

// Every accepted key, in canonical order.
const std::vector<std::string>& RunConfigKeys();

// Starts from the defaults of the configured env/algo, then applies the
// remaining entries in order. Later entries win. Throws ConfigError on
// unknown keys or unparsable values.
RunConfig MakeRunConfig(const ConfigEntries& entries);

// Canonical text with every key; MakeRunConfig(ParseConfigText(...)) of the
// result reproduces the configuration.
std::string FormatRunConfig(const RunConfig& config);

// ---- CSV ----

// Shortest text that parses back to the same double; "nan" for NaN.
std::string FormatDouble(double x);
double ParseDouble(std::string_view text);

using CsvRows = std::vector<std::vector<std::string>>;
// Comma-separated fields with "double-quoted" fields allowed.
CsvRows ParseCsv(std::string_view text);
std::string CsvField(const std::string& field);

std::string FormatMetricsCsv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> ParseMetricsCsv(std::string_view text);

// Header of joint-action tuples "(0,0)","(0,1)",... and one value row.
std::string FormatQtotCsv(const JointTable& q_tot);
JointTable ParseQtotCsv(std::string_view text);

// Header agent,0,1,...; one row of local Q values per agent.
std::string FormatAgentQCsv(const std::vector<std::vector<double>>& agent_q);
std::vector<std::vector<double>> ParseAgentQCsv(std::string_view text);

// ---- Table comparison ----

struct TableComparison {
  double linf = 0.0;
  double rmse = 0.0;
  bool argmax_match = false;
};

// Throws DimensionError on shape mismatch.
TableComparison CompareTable(const JointTable& learned, const JointTable& truth);

// ---- Curves ----

struct CurvePoint {
  std::int64_t env_step = 0;
  double mean = 0.0;
  double ci_low = 0.0;   // 12.5% empirical quantile
  double ci_high = 0.0;  // 87.5% empirical quantile
};

// Linear interpolation between order statistics at position q * (n - 1).
double EmpiricalQuantile(std::vector<double> values, double q);

// Pointwise mean and central 75% band of mean_return across runs. Throws
// std::invalid_argument when no runs are given or logging grids differ.
std::vector<CurvePoint> AggregateCurves(const std::vector<std::vector<MetricsRow>>& runs);

std::string FormatCurveCsv(const std::vector<CurvePoint>& curve);

// ---- Runs and sweeps ----

struct SeedSummary {
  std::uint64_t seed = 0;
  double final_return = 0.0;
  bool success = false;
  std::optional<JointAction> greedy;
  std::optional<JointAction> optimal;
  std::optional<TableComparison> table;
  std::optional<double> qtot_at_optimum;
};

struct SweepSummary {
  std::string env;
  Variant variant = Variant::kQFree;
  std::vector<SeedSummary> seeds;
  std::vector<CurvePoint> curve;

  std::size_t successes() const;
};

// Trains one seed and writes the run directory.
RunReport RunOne(const RunConfig& config, std::uint64_t seed, const std::filesystem::path& dir);

// Runs config.seeds seeds (config.jobs at a time) into seed_<k>/ under
// config.out_dir, then aggregates.
SweepSummary RunSweep(const RunConfig& config);

// Recomputes a seed summary from a run directory's CSV files.
SeedSummary SummarizeRunDir(const std::filesystem::path& dir);
// Recomputes the sweep summary from every seed_<k>/ run directory.
SweepSummary AggregateSweepDir(const std::filesystem::path& dir);

std::string FormatSummaryCsv(const SweepSummary& summary);
// Writes summary.csv and curve.csv into dir.
void WriteSweepOutputs(const SweepSummary& summary, const std::filesystem::path& dir);

// Differences between the summary/curve files in dir and a fresh
// aggregation; empty when they match byte-for-byte.
std::vector<std::string> VerifySweepDir(const std::filesystem::path& dir);

// ---- IGM analysis ----

struct IgmReport {
  JointAction a_star;
  JointTable normalized;  // A_tot with its maximum subtracted (tables) or as learned
  AdvantageConditionResult conditions;
  bool igm = false;
};

// Treats a table as Q_tot: normalizes it by its maximum, checks the
// advantage conditions at a_star (default: the table's argmax), and checks
// IGM for decentralized policies that pick a_star.
IgmReport CheckIgmTable(const JointTable& table, std::optional<JointAction> a_star, double tol);

// Evaluates a trained model on a single-step game: a_star is the tuple of
// per-agent greedy actions and A_tot is the learned joint advantage.
IgmReport CheckIgmModel(const FactorizationModel& model, ParamSet& params, const DecPomdp& env,
                        double tol);

// ---- Acceptance thresholds ----

// Failed threshold descriptions for the sweep's (env, variant); empty when
// all pass or none are defined.
std::vector<std::string> CheckThresholds(const SweepSummary& summary);

// ---- Files ----

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);

}  // namespace qfree

#endif  // QFREE_HARNESS_H_
