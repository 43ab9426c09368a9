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

// qfree: train, sweep, dump-qtot, check-igm, aggregate.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qfree/harness.h"
#include "qfree/nn.h"

namespace fs = std::filesystem;

namespace {

// Flags shared by train and sweep; each set flag becomes a config entry
// applied after the --config file.
struct RunFlags {
  std::string config_file;
  std::optional<std::string> env, algo, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  std::optional<double> v1, v2;
  bool literal_min_penalty = false;
  bool no_param_sharing = false;
  std::vector<std::string> sets;
  bool assert_thresholds = false;
};

void AddRunFlags(CLI::App* app, RunFlags& f) {
  app->add_option("--config", f.config_file, "key = value configuration file");
  app->add_option("--env", f.env, "matrix3 | matrix21 | memory_pair");
  app->add_option("--algo", f.algo, "qfree | qfree_sum | qfree_ablation | vdn | qmix | iql");
  app->add_option("--seed", f.seed, "run seed (first seed of a sweep)");
  app->add_option("--steps", f.steps, "environment steps per run");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--v1", f.v1, "equality regularizer weight");
  app->add_option("--v2", f.v2, "inequality regularizer weight");
  app->add_flag("--literal-min-penalty", f.literal_min_penalty,
                "penalize (min(A_tot, 0))^2 instead of (max(A_tot, 0))^2");
  app->add_flag("--no-param-sharing", f.no_param_sharing, "separate network per agent");
  app->add_option("--set", f.sets, "extra config entry key=value (repeatable)");
  app->add_flag("--assert", f.assert_thresholds, "exit nonzero when acceptance thresholds fail");
}

qfree::ConfigEntries CollectEntries(const RunFlags& f) {
  qfree::ConfigEntries entries;
  if (!f.config_file.empty()) entries = qfree::ReadConfigFile(f.config_file);
  auto add = [&](const std::string& key, const std::string& value) { entries.emplace_back(key, value); };
  if (f.env) add("env", *f.env);
  if (f.algo) add("algo", *f.algo);
  if (f.out) add("out", *f.out);
  if (f.seed) add("seed", std::to_string(*f.seed));
  if (f.steps) add("total_steps", std::to_string(*f.steps));
  if (f.v1) add("v1", qfree::FormatDouble(*f.v1));
  if (f.v2) add("v2", qfree::FormatDouble(*f.v2));
  if (f.literal_min_penalty) add("literal_min_penalty", "true");
  if (f.no_param_sharing) add("param_sharing", "false");
  for (const std::string& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw qfree::ConfigError("--set expects key=value, got '" + s + "'");
    add(s.substr(0, eq), s.substr(eq + 1));
  }
  return entries;
}

void PrintSeed(const qfree::SeedSummary& s) {
  std::printf("seed %llu: final_return=%s success=%d", static_cast<unsigned long long>(s.seed),
              qfree::FormatDouble(s.final_return).c_str(), s.success ? 1 : 0);
  if (s.greedy) std::printf(" greedy=%s", qfree::JointActionString(*s.greedy).c_str());
  if (s.table) {
    std::printf(" linf=%.4f rmse=%.4f", s.table->linf, s.table->rmse);
  }
  if (s.qtot_at_optimum) std::printf(" q_tot(optimum)=%.4f", *s.qtot_at_optimum);
  std::printf("\n");
}

int ReportThresholds(const qfree::SweepSummary& summary, bool enforce) {
  const auto failures = qfree::CheckThresholds(summary);
  for (const std::string& f : failures) std::fprintf(stderr, "threshold failed: %s\n", f.c_str());
  return enforce && !failures.empty() ? 3 : 0;
}

int RunTrain(const RunFlags& f) {
  qfree::RunConfig config = qfree::MakeRunConfig(CollectEntries(f));
  qfree::RunOne(config, config.train.seed, config.out_dir);
  qfree::SweepSummary summary;
  summary.env = config.env;
  summary.variant = config.train.variant;
  summary.seeds.push_back(qfree::SummarizeRunDir(config.out_dir));
  PrintSeed(summary.seeds.back());
  std::printf("wrote %s\n", config.out_dir.string().c_str());
  return ReportThresholds(summary, f.assert_thresholds);
}

int RunSweepCommand(const RunFlags& f, std::optional<std::size_t> seeds, std::optional<std::size_t> jobs) {
  qfree::ConfigEntries entries = CollectEntries(f);
  if (seeds) entries.emplace_back("seeds", std::to_string(*seeds));
  if (jobs) entries.emplace_back("jobs", std::to_string(*jobs));
  qfree::RunConfig config = qfree::MakeRunConfig(entries);
  const qfree::SweepSummary summary = qfree::RunSweep(config);
  for (const auto& s : summary.seeds) PrintSeed(s);
  std::printf("%zu/%zu successful; wrote %s\n", summary.successes(), summary.seeds.size(),
              config.out_dir.string().c_str());
  return ReportThresholds(summary, f.assert_thresholds);
}

// A trained model plus the environment it was trained on, from a run
// directory or from an explicit checkpoint and configuration.
struct LoadedModel {
  qfree::RunConfig config;
  std::unique_ptr<qfree::DecPomdp> env;
  std::unique_ptr<qfree::FactorizationModel> model;
};

LoadedModel LoadModel(const std::string& run_dir, const std::string& checkpoint, const RunFlags& f) {
  LoadedModel m;
  std::string ckpt = checkpoint;
  if (!run_dir.empty()) {
    m.config = qfree::MakeRunConfig(qfree::ReadConfigFile(fs::path(run_dir) / "config.txt"));
    if (ckpt.empty()) ckpt = (fs::path(run_dir) / "checkpoint.bin").string();
  } else {
    m.config = qfree::MakeRunConfig(CollectEntries(f));
  }
  if (ckpt.empty()) throw qfree::ConfigError("need --run or --checkpoint");
  m.env = qfree::MakeEnv(m.config.env, 0);
  qfree::ModelConfig mc = qfree::ModelConfigFor(*m.env, m.config.train.variant);
  mc.param_sharing = m.config.train.param_sharing;
  mc.unconstrained_omega = m.config.train.unconstrained_omega;
  m.model = std::make_unique<qfree::FactorizationModel>(mc, 0);
  qfree::HardCopy(qfree::ReadCheckpoint(ckpt), m.model->params());
  return m;
}

int DumpQtot(const std::string& run_dir, const std::string& checkpoint, const RunFlags& f,
             const std::string& table_out) {
  LoadedModel m = LoadModel(run_dir, checkpoint, f);
  const std::string csv = qfree::FormatQtotCsv(qfree::QtotTable(*m.model, m.model->params(), *m.env));
  if (table_out.empty() || table_out == "-") {
    std::cout << csv;
  } else {
    qfree::WriteTextFile(table_out, csv);
    std::printf("wrote %s\n", table_out.c_str());
  }
  return 0;
}

qfree::JointAction ParseJointAction(const std::string& text) {
  qfree::JointAction a;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) throw qfree::ConfigError("bad joint action '" + text + "'");
    a.push_back(static_cast<std::size_t>(std::stoull(part)));
  }
  return a;
}

int CheckIgm(const std::string& table, const std::string& run_dir, const std::string& checkpoint,
             const std::string& astar, double tol, const RunFlags& f) {
  qfree::IgmReport r;
  if (!table.empty()) {
    const qfree::JointTable q_tot = qfree::ParseQtotCsv(qfree::ReadTextFile(table));
    std::optional<qfree::JointAction> a_star;
    if (!astar.empty()) a_star = ParseJointAction(astar);
    r = qfree::CheckIgmTable(q_tot, a_star, tol);
  } else {
    LoadedModel m = LoadModel(run_dir, checkpoint, f);
    r = qfree::CheckIgmModel(*m.model, m.model->params(), *m.env, tol);
  }
  std::printf("a_star=%s eq_residual=%s max_violation=%s conditions=%s igm=%s\n",
              qfree::JointActionString(r.a_star).c_str(),
              qfree::FormatDouble(r.conditions.eq_residual).c_str(),
              qfree::FormatDouble(r.conditions.max_violation).c_str(), r.conditions.holds ? "holds" : "fails",
              r.igm ? "holds" : "fails");
  return f.assert_thresholds && !(r.conditions.holds && r.igm) ? 3 : 0;
}

int Aggregate(const std::string& dir, bool verify, bool enforce) {
  if (verify) {
    const auto problems = qfree::VerifySweepDir(dir);
    for (const auto& p : problems) std::fprintf(stderr, "verify: %s\n", p.c_str());
    if (!problems.empty()) return 4;
    std::printf("verified %s\n", dir.c_str());
  }
  const qfree::SweepSummary summary = qfree::AggregateSweepDir(dir);
  if (!verify) qfree::WriteSweepOutputs(summary, dir);
  for (const auto& s : summary.seeds) PrintSeed(s);
  std::printf("%zu/%zu successful\n", summary.successes(), summary.seeds.size());
  return ReportThresholds(summary, enforce);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Value-function factorization experiments for cooperative multi-agent RL"};
  app.require_subcommand(1);

  RunFlags train_flags;
  auto* train = app.add_subcommand("train", "train one seed");
  AddRunFlags(train, train_flags);

  RunFlags sweep_flags;
  std::optional<std::size_t> seeds, jobs;
  auto* sweep = app.add_subcommand("sweep", "train several seeds and summarize");
  AddRunFlags(sweep, sweep_flags);
  sweep->add_option("--seeds", seeds, "number of seeds (default 20)");
  sweep->add_option("--jobs", jobs, "concurrent runs");

  RunFlags dump_flags;
  std::string dump_run, dump_ckpt, dump_table;
  auto* dump = app.add_subcommand("dump-qtot", "write the learned Q_tot table of a single-step game");
  AddRunFlags(dump, dump_flags);
  dump->add_option("--run", dump_run, "run directory (config.txt + checkpoint.bin)");
  dump->add_option("--checkpoint", dump_ckpt, "checkpoint file (with --env/--algo/--config)");
  dump->add_option("--table", dump_table, "output CSV path, '-' for stdout");

  RunFlags igm_flags;
  std::string igm_table, igm_run, igm_ckpt, igm_astar;
  double tol = 1e-6;
  auto* igm = app.add_subcommand("check-igm", "advantage conditions and IGM on a table or model");
  AddRunFlags(igm, igm_flags);
  igm->add_option("--table", igm_table, "qtot CSV treated as Q_tot");
  igm->add_option("--run", igm_run, "run directory");
  igm->add_option("--checkpoint", igm_ckpt, "checkpoint file (with --env/--algo/--config)");
  igm->add_option("--astar", igm_astar, "joint action such as 0,0 (default: table argmax)");
  igm->add_option("--tol", tol, "tolerance for the advantage conditions");

  std::string agg_dir;
  bool verify = false, agg_assert = false;
  auto* agg = app.add_subcommand("aggregate", "rebuild summary.csv and curve.csv of a sweep");
  agg->add_option("--out", agg_dir, "sweep directory")->required();
  agg->add_flag("--verify", verify, "compare existing files with a fresh aggregation");
  agg->add_flag("--assert", agg_assert, "exit nonzero when acceptance thresholds fail");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return RunTrain(train_flags);
    if (*sweep) return RunSweepCommand(sweep_flags, seeds, jobs);
    if (*dump) return DumpQtot(dump_run, dump_ckpt, dump_flags, dump_table);
    if (*igm) return CheckIgm(igm_table, igm_run, igm_ckpt, igm_astar, tol, igm_flags);
    if (*agg) return Aggregate(agg_dir, verify, agg_assert);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qfree: %s\n", e.what());
    return 2;
  }
  return 1;
}
