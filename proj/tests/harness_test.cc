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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qfree/env.h"
#include "qfree/harness.h"
#include "qfree/random.h"

namespace qfree {
namespace {

namespace fs = std::filesystem;

fs::path ScratchDir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("qfree_harness_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---- configuration ----

TEST(ConfigTest, ParsesKeyValueLinesAndComments) {
  ConfigEntries e = ParseConfigText("# comment\nenv = matrix21\n\n  algo=qmix   # trailing\nv1 = 0.5\n");
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0], (std::pair<std::string, std::string>{"env", "matrix21"}));
  EXPECT_EQ(e[1], (std::pair<std::string, std::string>{"algo", "qmix"}));
  RunConfig c = MakeRunConfig(e);
  EXPECT_EQ(c.env, "matrix21");
  EXPECT_EQ(c.train.variant, Variant::kQmix);
  EXPECT_EQ(c.train.v1, 0.5);
  EXPECT_EQ(c.train.total_steps, 8000);
}

TEST(ConfigTest, RejectsMalformedInput) {
  EXPECT_THROW(ParseConfigText("env matrix3\n"), ConfigError);
  EXPECT_THROW(ParseConfigText("env = matrix3\nenv = matrix21\n"), ConfigError);
  EXPECT_THROW(MakeRunConfig(ParseConfigText("learning_rat = 0.1\n")), ConfigError);
  EXPECT_THROW(MakeRunConfig(ParseConfigText("gamma = fast\n")), ConfigError);
  EXPECT_THROW(MakeRunConfig(ParseConfigText("env = smac\n")), ConfigError);
  EXPECT_THROW(MakeRunConfig(ParseConfigText("algo = qtran\n")), ConfigError);
  EXPECT_THROW(MakeRunConfig(ParseConfigText("v2 = -1\n")), ConfigError);
}

TEST(ConfigTest, FormatRoundTrips) {
  RunConfig c = MakeRunConfig(ParseConfigText(
      "env = memory_pair\nalgo = qfree_sum\nseed = 7\nseeds = 3\nlearning_rate = 0.001\n"
      "literal_min_penalty = true\nreg_states = both\nhistory_window = 2\n"));
  const std::string text = FormatRunConfig(c);
  RunConfig again = MakeRunConfig(ParseConfigText(text));
  EXPECT_EQ(FormatRunConfig(again), text);
  EXPECT_EQ(again.train.seed, 7u);
  EXPECT_EQ(again.seeds, 3u);
  EXPECT_TRUE(again.train.literal_min_penalty);
  EXPECT_EQ(again.train.reg_states, RegularizerStates::kBoth);
  EXPECT_EQ(again.train.history_window, 2u);
  for (const std::string& key : RunConfigKeys()) {
    EXPECT_NE(text.find(key + " = "), std::string::npos) << key;
  }
}

// ---- CSV ----

TEST(CsvTest, DoublesRoundTrip) {
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const double x = rng.Uniform(-1e6, 1e6) * std::pow(10.0, rng.Uniform(-20, 20));
    EXPECT_EQ(ParseDouble(FormatDouble(x)), x);
  }
  EXPECT_EQ(FormatDouble(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_TRUE(std::isnan(ParseDouble("nan")));
  EXPECT_EQ(FormatDouble(-12.0), "-12");
  EXPECT_THROW(ParseDouble("1.5x"), std::invalid_argument);
}

TEST(CsvTest, QuotedFields) {
  EXPECT_EQ(CsvField("(0,1)"), "\"(0,1)\"");
  EXPECT_EQ(CsvField("plain"), "plain");
  CsvRows rows = ParseCsv("a,\"(0,1)\",\"say \"\"hi\"\"\"\n1,2,3\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"a", "(0,1)", "say \"hi\""}));
  EXPECT_EQ(rows[1], (std::vector<std::string>{"1", "2", "3"}));
}

TEST(CsvTest, MetricsRoundTrip) {
  std::vector<MetricsRow> rows(2);
  rows[0].env_step = 100;
  rows[0].loss = std::numeric_limits<double>::quiet_NaN();
  rows[1].env_step = 200;
  rows[1].episode = 200;
  rows[1].train_step = 169;
  rows[1].mean_return = 1.0;
  rows[1].loss = 0.125;
  rows[1].epsilon = 0.05;
  rows[1].seed = 4;
  const std::string text = FormatMetricsCsv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "env_step,episode,train_step,mean_return,loss,td_loss,eq_residual,ineq_penalty,epsilon,seed");
  std::vector<MetricsRow> back = ParseMetricsCsv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(std::isnan(back[0].loss));
  EXPECT_EQ(back[1].train_step, 169);
  EXPECT_EQ(back[1].loss, 0.125);
  EXPECT_EQ(FormatMetricsCsv(back), text);
}

TEST(CsvTest, QtotTableLayout) {
  JointTable t(2, 2, {1.0, -12.0, 0.5, 0.0});
  const std::string text = FormatQtotCsv(t);
  EXPECT_EQ(text, "\"(0,0)\",\"(0,1)\",\"(1,0)\",\"(1,1)\"\n1,-12,0.5,0\n");
  JointTable back = ParseQtotCsv(text);
  EXPECT_EQ(back.n_agents(), 2u);
  EXPECT_EQ(back.n_actions(), 2u);
  EXPECT_EQ(std::vector<double>(back.values().begin(), back.values().end()),
            std::vector<double>(t.values().begin(), t.values().end()));
  EXPECT_THROW(ParseQtotCsv("\"(0,0)\",\"(0,1)\"\n1\n"), std::invalid_argument);
}

TEST(CsvTest, AgentRowsRoundTrip) {
  const std::vector<std::vector<double>> q{{1.0, -2.5, 3.0}, {0.0, 0.25, -1.0}};
  const std::string text = FormatAgentQCsv(q);
  EXPECT_EQ(text.substr(0, text.find('\n')), "agent,0,1,2");
  EXPECT_EQ(ParseAgentQCsv(text), q);
}

// ---- table comparison ----

JointTable Payoff3() { return MakeMatrix3()->payoff_table(); }

TEST(CompareTableTest, IdenticalTables) {
  TableComparison c = CompareTable(Payoff3(), Payoff3());
  EXPECT_EQ(c.linf, 0.0);
  EXPECT_EQ(c.rmse, 0.0);
  EXPECT_TRUE(c.argmax_match);
}

TEST(CompareTableTest, MonotoneMixerTableMissesOptimum) {
  const JointTable qmix(2, 3, {-9.4, -9.4, -9.4, -9.4, 0.0, 0.0, -9.4, 0.0, 0.0});
  TableComparison c = CompareTable(qmix, Payoff3());
  EXPECT_FALSE(c.argmax_match);
  EXPECT_NEAR(c.linf, 10.4, 1e-12);
}

TEST(CompareTableTest, ExactReconstructionMatches) {
  const JointTable learned(2, 3, {1.0, -12.0, -12.0, -12.0, 0.0, 0.0, -12.0, 0.0, 0.0});
  TableComparison c = CompareTable(learned, Payoff3());
  EXPECT_EQ(c.linf, 0.0);
  EXPECT_TRUE(c.argmax_match);
}

TEST(CompareTableTest, ErrorMetricsByHand) {
  const JointTable a(1, 4, {0.0, 1.0, 2.0, 3.0});
  const JointTable b(1, 4, {0.0, 1.0, 2.0, 1.0});
  TableComparison c = CompareTable(a, b);
  EXPECT_EQ(c.linf, 2.0);
  EXPECT_DOUBLE_EQ(c.rmse, 1.0);
  EXPECT_TRUE(c.argmax_match == false);
  EXPECT_THROW(CompareTable(a, Payoff3()), DimensionError);
}

// ---- curves ----

std::vector<MetricsRow> ConstantRun(double value, int points) {
  std::vector<MetricsRow> rows(points);
  for (int k = 0; k < points; ++k) {
    rows[k].env_step = 100 * (k + 1);
    rows[k].mean_return = value;
  }
  return rows;
}

TEST(CurveTest, SingleRunHasZeroWidthBand) {
  auto run = ConstantRun(0.7, 4);
  run[2].mean_return = 0.1;
  std::vector<CurvePoint> curve = AggregateCurves({run});
  ASSERT_EQ(curve.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(curve[k].mean, run[k].mean_return);
    EXPECT_EQ(curve[k].ci_low, curve[k].ci_high);
    EXPECT_EQ(curve[k].env_step, run[k].env_step);
  }
}

TEST(CurveTest, TwoRunsAverage) {
  std::vector<CurvePoint> curve = AggregateCurves({ConstantRun(0.0, 3), ConstantRun(1.0, 3)});
  for (const CurvePoint& p : curve) {
    EXPECT_EQ(p.mean, 0.5);
    EXPECT_EQ(p.ci_low, 0.125);
    EXPECT_EQ(p.ci_high, 0.875);
  }
}

TEST(CurveTest, MismatchedGridsRejected) {
  EXPECT_THROW(AggregateCurves({}), std::invalid_argument);
  EXPECT_THROW(AggregateCurves({ConstantRun(0.0, 3), ConstantRun(0.0, 4)}), std::invalid_argument);
  auto shifted = ConstantRun(0.0, 3);
  shifted[1].env_step = 250;
  EXPECT_THROW(AggregateCurves({ConstantRun(0.0, 3), shifted}), std::invalid_argument);
}

TEST(CurveTest, QuantileInterpolation) {
  EXPECT_EQ(EmpiricalQuantile({3.0, 1.0, 2.0}, 0.5), 2.0);
  EXPECT_EQ(EmpiricalQuantile({0.0, 10.0}, 0.25), 2.5);
  EXPECT_EQ(EmpiricalQuantile({5.0}, 0.9), 5.0);
  EXPECT_THROW(EmpiricalQuantile({}, 0.5), std::invalid_argument);
}

TEST(CurveTest, BandBracketsTrueQuantilesOfKnownDistribution) {
  // Uniform(0, 1) returns: the 12.5% and 87.5% quantiles are 0.125 and 0.875.
  Rng rng(3);
  const int points = 200;
  std::vector<std::vector<MetricsRow>> runs(20, ConstantRun(0.0, points));
  for (auto& run : runs) {
    for (auto& row : run) row.mean_return = rng.Uniform(0.0, 1.0);
  }
  std::vector<CurvePoint> curve = AggregateCurves(runs);
  double low = 0.0, high = 0.0;
  for (const CurvePoint& p : curve) {
    low += p.ci_low;
    high += p.ci_high;
    EXPECT_LE(p.ci_low, p.mean);
    EXPECT_GE(p.ci_high, p.mean);
  }
  // Interpolating at position q (n - 1) between uniform order statistics has
  // expectation (1 + q (n - 1)) / (n + 1); averaged over 200 grid points the
  // sampling error is about 0.005.
  const double n = 20.0;
  EXPECT_NEAR(low / points, (1 + 0.125 * (n - 1)) / (n + 1), 0.015);
  EXPECT_NEAR(high / points, (1 + 0.875 * (n - 1)) / (n + 1), 0.015);
  EXPECT_LT(low / points, 0.25);
  EXPECT_GT(high / points, 0.75);
}

// ---- IGM analysis ----

TEST(CheckIgmTest, TruePayoffHoldsAtOptimum) {
  IgmReport r = CheckIgmTable(Payoff3(), JointAction{0, 0}, 1e-6);
  EXPECT_TRUE(r.conditions.holds);
  EXPECT_EQ(r.conditions.eq_residual, 0.0);
  EXPECT_EQ(r.conditions.max_violation, 0.0);
  EXPECT_TRUE(r.igm);
  EXPECT_EQ(r.normalized.at(JointAction{0, 1}), -13.0);
  EXPECT_EQ(r.normalized.at(JointAction{2, 2}), -1.0);
  IgmReport wrong = CheckIgmTable(Payoff3(), JointAction{2, 2}, 1e-6);
  EXPECT_FALSE(wrong.conditions.holds);
  EXPECT_DOUBLE_EQ(wrong.conditions.eq_residual, 1.0);
  EXPECT_DOUBLE_EQ(wrong.conditions.max_violation, 0.0);
  EXPECT_FALSE(wrong.igm);
}

// Independent oracle: scan every cell against the candidate decision.
struct Enumerated {
  bool holds;
  bool igm;
};

Enumerated EnumerateIgm(const std::vector<double>& cells, std::size_t k, std::size_t star, double tol) {
  const double best = *std::max_element(cells.begin(), cells.end());
  double violation = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (c != star) violation = std::max(violation, cells[c] - best);
  }
  const bool holds = std::abs(cells[star] - best) <= tol && violation <= tol;
  std::size_t first_best = 0;
  while (cells[first_best] != best) ++first_best;
  (void)k;
  return {holds, first_best == star};
}

TEST(CheckIgmTest, AgreesWithEnumerationOnRandomTables) {
  Rng rng(4);
  for (int instance = 0; instance < 500; ++instance) {
    const std::size_t k = 2 + rng.UniformInt(3);
    std::vector<double> cells(k * k);
    for (double& x : cells) x = rng.Uniform(-5, 5);
    JointTable t(2, k, cells);
    const std::size_t star = instance % 3 == 0 ? ArgmaxFirst(cells) : rng.UniformInt(k * k);
    IgmReport r = CheckIgmTable(t, t.Decode(star), 1e-9);
    Enumerated e = EnumerateIgm(cells, k, star, 1e-9);
    EXPECT_EQ(r.conditions.holds, e.holds);
    EXPECT_EQ(r.igm, e.igm);
    EXPECT_EQ(r.igm, r.conditions.holds);
  }
}

TEST(CheckIgmTest, ModelReportUsesLearnedAdvantages) {
  auto env = MakeMatrix3();
  FactorizationModel model(ModelConfigFor(*env, Variant::kQFree), 3);
  IgmReport r = CheckIgmModel(model, model.params(), *env, 1e-6);
  TabularValues tv = EvaluateTabular(model, model.params(), *env);
  EXPECT_EQ(r.a_star, tv.greedy);
  EXPECT_EQ(r.igm, tv.a_tot.Argmax() == tv.greedy);
}

// ---- runs and sweeps ----

RunConfig TinyRunConfig(const std::string& env, const std::string& algo, const fs::path& out) {
  RunConfig c = MakeRunConfig(ParseConfigText("env = " + env + "\nalgo = " + algo +
                                              "\ntotal_steps = 80\nbatch_episodes = 4\nlog_interval = 20\n"));
  c.out_dir = out;
  c.seeds = 2;
  return c;
}

TEST(RunTest, WritesArtifactsReproducibly) {
  const fs::path dir = ScratchDir("run");
  RunConfig c = TinyRunConfig("matrix3", "qfree", dir);
  RunOne(c, 3, dir / "a");
  RunOne(c, 3, dir / "b");
  for (const char* file : {"metrics.csv", "qtot.csv", "agent_q.csv", "checkpoint.bin", "config.txt", "manifest.txt"}) {
    EXPECT_TRUE(fs::exists(dir / "a" / file)) << file;
  }
  for (const char* file : {"metrics.csv", "qtot.csv", "agent_q.csv", "checkpoint.bin"}) {
    EXPECT_EQ(ReadTextFile(dir / "a" / file), ReadTextFile(dir / "b" / file)) << file;
  }
  // The configs differ only in their output directory.
  ConfigEntries ca = ReadConfigFile(dir / "a" / "config.txt");
  ConfigEntries cb = ReadConfigFile(dir / "b" / "config.txt");
  ASSERT_EQ(ca.size(), cb.size());
  for (std::size_t k = 0; k < ca.size(); ++k) {
    if (ca[k].first != "out") EXPECT_EQ(ca[k], cb[k]);
  }
  const std::vector<MetricsRow> rows = ParseMetricsCsv(ReadTextFile(dir / "a" / "metrics.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows.back().env_step, 80);
  EXPECT_EQ(ParseQtotCsv(ReadTextFile(dir / "a" / "qtot.csv")).size(), 9u);

  RunOne(TinyRunConfig("memory_pair", "qfree", dir), 3, dir / "m");
  EXPECT_TRUE(fs::exists(dir / "m" / "metrics.csv"));
  EXPECT_FALSE(fs::exists(dir / "m" / "qtot.csv"));
  fs::remove_all(dir);
}

TEST(SweepTest, AggregatesAndVerifies) {
  const fs::path dir = ScratchDir("sweep");
  RunConfig c = TinyRunConfig("matrix3", "vdn", dir);
  c.jobs = 2;
  SweepSummary s = RunSweep(c);
  ASSERT_EQ(s.seeds.size(), 2u);
  EXPECT_EQ(s.seeds[0].seed, 0u);
  EXPECT_EQ(s.seeds[1].seed, 1u);
  EXPECT_TRUE(fs::exists(dir / "seed_0" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "curve.csv"));
  EXPECT_EQ(s.curve.size(), 4u);
  EXPECT_TRUE(VerifySweepDir(dir).empty());

  // Recomputed summaries match what the sweep reported.
  SweepSummary again = AggregateSweepDir(dir);
  EXPECT_EQ(FormatSummaryCsv(again), FormatSummaryCsv(s));
  EXPECT_EQ(FormatCurveCsv(again.curve), FormatCurveCsv(s.curve));

  WriteTextFile(dir / "curve.csv", "env_step,mean,ci_low,ci_high\n");
  EXPECT_FALSE(VerifySweepDir(dir).empty());
  fs::remove_all(dir);
}

SeedSummary MatrixSeed(std::uint64_t seed, JointAction greedy, double q_opt, double linf) {
  SeedSummary s;
  s.seed = seed;
  s.greedy = greedy;
  s.optimal = JointAction{0, 0};
  s.success = greedy == JointAction{0, 0};
  s.final_return = s.success ? 1.0 : 0.0;
  s.qtot_at_optimum = q_opt;
  s.table = TableComparison{linf, linf / 2, s.success};
  return s;
}

TEST(ThresholdTest, MatrixQFreeNeedsNinetyPercent) {
  SweepSummary s;
  s.env = "matrix3";
  s.variant = Variant::kQFree;
  for (std::uint64_t k = 0; k < 20; ++k) s.seeds.push_back(MatrixSeed(k, k < 18 ? JointAction{0, 0} : JointAction{2, 2}, 1.0, 0.1));
  EXPECT_TRUE(CheckThresholds(s).empty());
  s.seeds[0] = MatrixSeed(0, JointAction{1, 1}, 0.0, 0.1);
  EXPECT_EQ(CheckThresholds(s).size(), 1u);
  s.seeds[0] = MatrixSeed(0, JointAction{0, 0}, 1.0, 0.7);
  EXPECT_EQ(CheckThresholds(s).size(), 1u);
}

TEST(ThresholdTest, BaselinesMustMissOptimumWithNegativeValue) {
  SweepSummary s;
  s.env = "matrix3";
  s.variant = Variant::kQmix;
  for (std::uint64_t k = 0; k < 20; ++k) s.seeds.push_back(MatrixSeed(k, JointAction{2, 2}, -9.4, 10.0));
  EXPECT_TRUE(CheckThresholds(s).empty());
  s.seeds[0].qtot_at_optimum = 0.5;
  s.seeds[1].qtot_at_optimum = 0.5;
  s.seeds[2].qtot_at_optimum = 0.5;
  EXPECT_EQ(CheckThresholds(s).size(), 1u);
}

}  // namespace
}  // namespace qfree
