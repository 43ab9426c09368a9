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

#include "qfree/harness.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "qfree/nn.h"

namespace qfree {

namespace fs = std::filesystem;

// ------------------------------------------------------------------- files

std::string ReadTextFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// ------------------------------------------------------------------ config

namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T ParseNumber(std::string_view key, std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("config: bad value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

bool ParseBool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config: expected true/false for " + std::string(key) + ", got '" +
                    std::string(text) + "'");
}

std::string BoolText(bool b) { return b ? "true" : "false"; }

struct KeySpec {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
KeySpec NumberKey(std::string key, T TrainConfig::*field) {
  return {key,
          [key, field](RunConfig& c, std::string_view v) {
            c.train.*field = ParseNumber<T>(key, v);
          },
          [field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return FormatDouble(c.train.*field);
            } else {
              return std::to_string(c.train.*field);
            }
          }};
}

KeySpec BoolKey(std::string key, bool TrainConfig::*field) {
  return {key, [key, field](RunConfig& c, std::string_view v) { c.train.*field = ParseBool(key, v); },
          [field](const RunConfig& c) { return BoolText(c.train.*field); }};
}

const std::vector<KeySpec>& KeySpecs() {
  static const std::vector<KeySpec> specs = [] {
    std::vector<KeySpec> s;
    // env and algo are resolved before the others; listed for completeness.
    s.push_back({"env", [](RunConfig& c, std::string_view v) { c.env = std::string(v); },
                 [](const RunConfig& c) { return c.env; }});
    s.push_back({"algo",
                 [](RunConfig& c, std::string_view v) {
                   try {
                     c.train.variant = ParseVariant(std::string(v));
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(e.what());
                   }
                 },
                 [](const RunConfig& c) { return VariantName(c.train.variant); }});
    s.push_back({"out", [](RunConfig& c, std::string_view v) { c.out_dir = std::string(v); },
                 [](const RunConfig& c) { return c.out_dir.string(); }});
    s.push_back({"seed",
                 [](RunConfig& c, std::string_view v) { c.train.seed = ParseNumber<std::uint64_t>("seed", v); },
                 [](const RunConfig& c) { return std::to_string(c.train.seed); }});
    s.push_back({"seeds",
                 [](RunConfig& c, std::string_view v) { c.seeds = ParseNumber<std::size_t>("seeds", v); },
                 [](const RunConfig& c) { return std::to_string(c.seeds); }});
    s.push_back({"jobs",
                 [](RunConfig& c, std::string_view v) { c.jobs = ParseNumber<std::size_t>("jobs", v); },
                 [](const RunConfig& c) { return std::to_string(c.jobs); }});
    s.push_back(NumberKey("total_steps", &TrainConfig::total_steps));
    s.push_back(NumberKey("gamma", &TrainConfig::gamma));
    s.push_back(NumberKey("epsilon_start", &TrainConfig::epsilon_start));
    s.push_back(NumberKey("epsilon_end", &TrainConfig::epsilon_end));
    s.push_back(NumberKey("epsilon_anneal_steps", &TrainConfig::epsilon_anneal_steps));
    s.push_back(NumberKey("uniform_explore", &TrainConfig::uniform_explore));
    s.push_back(NumberKey("learning_rate", &TrainConfig::learning_rate));
    s.push_back(NumberKey("batch_episodes", &TrainConfig::batch_episodes));
    s.push_back(NumberKey("buffer_capacity", &TrainConfig::buffer_capacity));
    s.push_back(NumberKey("target_update_interval", &TrainConfig::target_update_interval));
    s.push_back(NumberKey("grad_clip", &TrainConfig::grad_clip));
    s.push_back(NumberKey("history_window", &TrainConfig::history_window));
    s.push_back(NumberKey("v1", &TrainConfig::v1));
    s.push_back(NumberKey("v2", &TrainConfig::v2));
    s.push_back(BoolKey("literal_min_penalty", &TrainConfig::literal_min_penalty));
    s.push_back({"reg_states",
                 [](RunConfig& c, std::string_view v) {
                   try {
                     c.train.reg_states = ParseRegularizerStates(std::string(v));
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(e.what());
                   }
                 },
                 [](const RunConfig& c) { return RegularizerStatesName(c.train.reg_states); }});
    s.push_back(BoolKey("ineq_all_actions", &TrainConfig::ineq_all_actions));
    s.push_back(BoolKey("param_sharing", &TrainConfig::param_sharing));
    s.push_back(BoolKey("unconstrained_omega", &TrainConfig::unconstrained_omega));
    s.push_back(NumberKey("log_interval", &TrainConfig::log_interval));
    s.push_back(NumberKey("test_episodes", &TrainConfig::test_episodes));
    s.push_back(NumberKey("eval_window", &TrainConfig::eval_window));
    return s;
  }();
  return specs;
}

const KeySpec* FindKey(std::string_view key) {
  for (const KeySpec& s : KeySpecs()) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

}  // namespace

ConfigEntries ParseConfigText(std::string_view text) {
  ConfigEntries entries;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(Trim(line.substr(0, eq)));
    std::string value(Trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    for (const auto& [k, v] : entries) {
      if (k == key) throw ConfigError("config line " + std::to_string(line_no) + ": repeated key " + key);
    }
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

ConfigEntries ReadConfigFile(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return ParseConfigText(ReadTextFile(path));
}

const std::vector<std::string>& RunConfigKeys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const KeySpec& s : KeySpecs()) k.push_back(s.key);
    return k;
  }();
  return keys;
}

RunConfig MakeRunConfig(const ConfigEntries& entries) {
  std::string env = "matrix3";
  std::string algo = "qfree";
  for (const auto& [key, value] : entries) {
    if (FindKey(key) == nullptr) throw ConfigError("config: unknown key '" + key + "'");
    if (key == "env") env = value;
    if (key == "algo") algo = value;
  }
  if (!IsKnownEnv(env)) {
    throw ConfigError("config: unknown env '" + env + "' (expected matrix3 | matrix21 | memory_pair)");
  }
  RunConfig config;
  config.env = env;
  try {
    config.train = DefaultTrainConfig(env, ParseVariant(algo));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (const auto& [key, value] : entries) {
    if (key == "env" || key == "algo") continue;
    FindKey(key)->set(config, value);
  }
  if (config.seeds == 0) throw ConfigError("config: seeds must be positive");
  if (config.jobs == 0) throw ConfigError("config: jobs must be positive");
  try {
    config.train.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return config;
}

std::string FormatRunConfig(const RunConfig& config) {
  std::string out;
  for (const KeySpec& s : KeySpecs()) out += s.key + " = " + s.get(config) + "\n";
  return out;
}

// --------------------------------------------------------------------- csv

std::string FormatDouble(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("cannot format double");
  return std::string(buf, ptr);
}

double ParseDouble(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

CsvRows ParseCsv(std::string_view text) {
  CsvRows rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (quoted) throw std::invalid_argument("csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string CsvField(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace {

constexpr const char* kMetricsHeader =
    "env_step,episode,train_step,mean_return,loss,td_loss,eq_residual,ineq_penalty,epsilon,seed";

std::int64_t ParseInt(std::string_view text) {
  std::int64_t value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::string JoinRow(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += CsvField(fields[i]);
  }
  return out + "\n";
}

}  // namespace

std::string FormatMetricsCsv(const std::vector<MetricsRow>& rows) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const MetricsRow& r : rows) {
    out += JoinRow({std::to_string(r.env_step), std::to_string(r.episode),
                    std::to_string(r.train_step), FormatDouble(r.mean_return), FormatDouble(r.loss),
                    FormatDouble(r.td_loss), FormatDouble(r.eq_residual),
                    FormatDouble(r.ineq_penalty), FormatDouble(r.epsilon), std::to_string(r.seed)});
  }
  return out;
}

std::vector<MetricsRow> ParseMetricsCsv(std::string_view text) {
  const CsvRows rows = ParseCsv(text);
  if (rows.empty() || JoinRow(rows[0]) != std::string(kMetricsHeader) + "\n") {
    throw std::invalid_argument("metrics csv: unexpected header");
  }
  std::vector<MetricsRow> out;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& f = rows[k];
    if (f.size() != 10) throw std::invalid_argument("metrics csv: row " + std::to_string(k) + " has wrong width");
    MetricsRow r;
    r.env_step = ParseInt(f[0]);
    r.episode = ParseInt(f[1]);
    r.train_step = ParseInt(f[2]);
    r.mean_return = ParseDouble(f[3]);
    r.loss = ParseDouble(f[4]);
    r.td_loss = ParseDouble(f[5]);
    r.eq_residual = ParseDouble(f[6]);
    r.ineq_penalty = ParseDouble(f[7]);
    r.epsilon = ParseDouble(f[8]);
    r.seed = static_cast<std::uint64_t>(ParseInt(f[9]));
    out.push_back(r);
  }
  return out;
}

std::string FormatQtotCsv(const JointTable& q_tot) {
  std::vector<std::string> header, values;
  for (std::size_t j = 0; j < q_tot.size(); ++j) {
    header.push_back(JointActionString(q_tot.Decode(j)));
    values.push_back(FormatDouble(q_tot[j]));
  }
  return JoinRow(header) + JoinRow(values);
}

JointTable ParseQtotCsv(std::string_view text) {
  const CsvRows rows = ParseCsv(text);
  if (rows.size() != 2) throw std::invalid_argument("qtot csv: expected a header and one value row");
  const std::size_t cells = rows[0].size();
  if (rows[1].size() != cells) throw std::invalid_argument("qtot csv: value row has wrong width");
  const std::string& first = rows[0][0];
  const std::size_t n_agents = static_cast<std::size_t>(std::count(first.begin(), first.end(), ',')) + 1;
  const auto n_actions = static_cast<std::size_t>(
      std::llround(std::pow(static_cast<double>(cells), 1.0 / static_cast<double>(n_agents))));
  JointTable table(n_agents, n_actions);
  if (table.size() != cells) throw std::invalid_argument("qtot csv: header is not a full joint table");
  for (std::size_t j = 0; j < cells; ++j) {
    if (rows[0][j] != JointActionString(table.Decode(j))) {
      throw std::invalid_argument("qtot csv: unexpected column " + rows[0][j]);
    }
    table[j] = ParseDouble(rows[1][j]);
  }
  return table;
}

std::string FormatAgentQCsv(const std::vector<std::vector<double>>& agent_q) {
  if (agent_q.empty()) throw std::invalid_argument("agent q csv: no agents");
  std::vector<std::string> header = {"agent"};
  for (std::size_t a = 0; a < agent_q[0].size(); ++a) header.push_back(std::to_string(a));
  std::string out = JoinRow(header);
  for (std::size_t i = 0; i < agent_q.size(); ++i) {
    std::vector<std::string> row = {std::to_string(i)};
    for (double q : agent_q[i]) row.push_back(FormatDouble(q));
    out += JoinRow(row);
  }
  return out;
}

std::vector<std::vector<double>> ParseAgentQCsv(std::string_view text) {
  const CsvRows rows = ParseCsv(text);
  if (rows.size() < 2 || rows[0].size() < 2 || rows[0][0] != "agent") {
    throw std::invalid_argument("agent q csv: expected header 'agent,0,1,...' and agent rows");
  }
  std::vector<std::vector<double>> out;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].size() != rows[0].size()) throw std::invalid_argument("agent q csv: row has wrong width");
    if (ParseInt(rows[k][0]) != static_cast<std::int64_t>(k - 1)) {
      throw std::invalid_argument("agent q csv: agents out of order");
    }
    std::vector<double> q;
    for (std::size_t a = 1; a < rows[k].size(); ++a) q.push_back(ParseDouble(rows[k][a]));
    out.push_back(std::move(q));
  }
  return out;
}

// ------------------------------------------------------------------ tables

TableComparison CompareTable(const JointTable& learned, const JointTable& truth) {
  if (learned.n_agents() != truth.n_agents() || learned.n_actions() != truth.n_actions()) {
    throw DimensionError("compare table: shapes differ");
  }
  TableComparison c;
  double sq = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const double d = std::abs(learned[j] - truth[j]);
    c.linf = std::max(c.linf, d);
    sq += d * d;
  }
  c.rmse = std::sqrt(sq / static_cast<double>(truth.size()));
  c.argmax_match = learned.Argmax() == truth.Argmax();
  return c;
}

// ------------------------------------------------------------------ curves

double EmpiricalQuantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of no values");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<CurvePoint> AggregateCurves(const std::vector<std::vector<MetricsRow>>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  const std::size_t points = runs[0].size();
  for (const auto& run : runs) {
    if (run.size() != points) throw std::invalid_argument("aggregate: runs have different logging grids");
    for (std::size_t k = 0; k < points; ++k) {
      if (run[k].env_step != runs[0][k].env_step) {
        throw std::invalid_argument("aggregate: runs have different logging grids");
      }
    }
  }
  std::vector<CurvePoint> curve;
  for (std::size_t k = 0; k < points; ++k) {
    std::vector<double> values;
    double total = 0.0;
    for (const auto& run : runs) {
      values.push_back(run[k].mean_return);
      total += run[k].mean_return;
    }
    CurvePoint p;
    p.env_step = runs[0][k].env_step;
    p.mean = total / static_cast<double>(runs.size());
    p.ci_low = EmpiricalQuantile(values, 0.125);
    p.ci_high = EmpiricalQuantile(values, 0.875);
    curve.push_back(p);
  }
  return curve;
}

std::string FormatCurveCsv(const std::vector<CurvePoint>& curve) {
  std::string out = "env_step,mean,ci_low,ci_high\n";
  for (const CurvePoint& p : curve) {
    out += JoinRow({std::to_string(p.env_step), FormatDouble(p.mean), FormatDouble(p.ci_low),
                    FormatDouble(p.ci_high)});
  }
  return out;
}

// -------------------------------------------------------------------- runs

std::size_t SweepSummary::successes() const {
  return static_cast<std::size_t>(
      std::count_if(seeds.begin(), seeds.end(), [](const SeedSummary& s) { return s.success; }));
}

namespace {

std::string UtcNow() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

fs::path SeedDir(const fs::path& root, std::uint64_t seed) {
  return root / ("seed_" + std::to_string(seed));
}

}  // namespace

RunReport RunOne(const RunConfig& config, std::uint64_t seed, const fs::path& dir) {
  RunConfig run = config;
  run.train.seed = seed;
  run.out_dir = dir;
  run.seeds = 1;
  fs::create_directories(dir);
  const std::string started = UtcNow();
  const auto t0 = std::chrono::steady_clock::now();
  WriteTextFile(dir / "config.txt", FormatRunConfig(run));
  RunReport report = RunTraining(run.env, run.train);
  WriteTextFile(dir / "metrics.csv", FormatMetricsCsv(report.rows));
  if (report.tabular) {
    WriteTextFile(dir / "qtot.csv", FormatQtotCsv(report.tabular->q_tot));
    WriteTextFile(dir / "agent_q.csv", FormatAgentQCsv(report.tabular->agent_q));
  }
  WriteCheckpoint(report.params, (dir / "checkpoint.bin").string());
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream manifest;
  manifest << "started_at = " << started << "\n"
           << "finished_at = " << UtcNow() << "\n"
           << "wall_seconds = " << std::fixed << std::setprecision(3) << seconds << "\n";
  WriteTextFile(dir / "manifest.txt", manifest.str());
  return report;
}

SweepSummary RunSweep(const RunConfig& config) {
  fs::create_directories(config.out_dir);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t k = next++; k < config.seeds; k = next++) {
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error) return;
      }
      const std::uint64_t seed = config.train.seed + k;
      try {
        RunOne(config, seed, SeedDir(config.out_dir, seed));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  const std::size_t jobs = std::min(config.jobs, config.seeds);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
  SweepSummary summary = AggregateSweepDir(config.out_dir);
  WriteSweepOutputs(summary, config.out_dir);
  return summary;
}

SeedSummary SummarizeRunDir(const fs::path& dir) {
  const RunConfig config = MakeRunConfig(ReadConfigFile(dir / "config.txt"));
  const std::vector<MetricsRow> rows = ParseMetricsCsv(ReadTextFile(dir / "metrics.csv"));

  RunReport report;
  report.env_name = config.env;
  report.variant = config.train.variant;
  report.seed = config.train.seed;
  const std::unique_ptr<DecPomdp> env = MakeEnv(config.env, 0);
  report.optimal_return = env->optimal_return();
  const std::size_t window = std::min(config.train.eval_window, rows.size());
  if (window == 0) {
    report.final_window_return = std::numeric_limits<double>::quiet_NaN();
  } else {
    double total = 0.0;
    for (std::size_t k = rows.size() - window; k < rows.size(); ++k) total += rows[k].mean_return;
    report.final_window_return = total / static_cast<double>(window);
  }

  SeedSummary s;
  s.seed = config.train.seed;
  s.final_return = report.final_window_return;
  if (const MatrixGame* game = env->AsMatrixGame()) {
    TabularValues tv;
    tv.q_tot = ParseQtotCsv(ReadTextFile(dir / "qtot.csv"));
    tv.agent_q = ParseAgentQCsv(ReadTextFile(dir / "agent_q.csv"));
    tv.greedy = GreedyJointAction(tv.agent_q);
    report.tabular = tv;
    report.optimal_action = game->optimal_action();
    s.greedy = tv.greedy;
    s.optimal = game->optimal_action();
    s.table = CompareTable(tv.q_tot, game->payoff_table());
    s.qtot_at_optimum = tv.q_tot.at(*s.optimal);
  }
  s.success = IsSuccessfulRun(report);
  return s;
}

SweepSummary AggregateSweepDir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::invalid_argument("not a sweep directory: " + dir.string());
  std::vector<std::pair<std::uint64_t, fs::path>> runs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || name.rfind("seed_", 0) != 0) continue;
    runs.emplace_back(static_cast<std::uint64_t>(ParseInt(std::string_view(name).substr(5))), entry.path());
  }
  if (runs.empty()) throw std::invalid_argument("no seed_<k> run directories in " + dir.string());
  std::sort(runs.begin(), runs.end());

  SweepSummary summary;
  std::vector<std::vector<MetricsRow>> curves;
  for (const auto& [seed, path] : runs) {
    const RunConfig config = MakeRunConfig(ReadConfigFile(path / "config.txt"));
    if (summary.seeds.empty()) {
      summary.env = config.env;
      summary.variant = config.train.variant;
    } else if (config.env != summary.env || config.train.variant != summary.variant) {
      throw std::invalid_argument("sweep mixes environments or variants: " + path.string());
    }
    summary.seeds.push_back(SummarizeRunDir(path));
    curves.push_back(ParseMetricsCsv(ReadTextFile(path / "metrics.csv")));
  }
  summary.curve = AggregateCurves(curves);
  return summary;
}

std::string FormatSummaryCsv(const SweepSummary& summary) {
  std::string out =
      "seed,final_return,success,greedy_action,optimal_action,linf,rmse,argmax_match,qtot_at_optimum\n";
  for (const SeedSummary& s : summary.seeds) {
    out += JoinRow({std::to_string(s.seed), FormatDouble(s.final_return), s.success ? "1" : "0",
                    s.greedy ? JointActionString(*s.greedy) : "",
                    s.optimal ? JointActionString(*s.optimal) : "",
                    s.table ? FormatDouble(s.table->linf) : "",
                    s.table ? FormatDouble(s.table->rmse) : "",
                    s.table ? (s.table->argmax_match ? "1" : "0") : "",
                    s.qtot_at_optimum ? FormatDouble(*s.qtot_at_optimum) : ""});
  }
  return out;
}

void WriteSweepOutputs(const SweepSummary& summary, const fs::path& dir) {
  WriteTextFile(dir / "summary.csv", FormatSummaryCsv(summary));
  WriteTextFile(dir / "curve.csv", FormatCurveCsv(summary.curve));
}

std::vector<std::string> VerifySweepDir(const fs::path& dir) {
  const SweepSummary fresh = AggregateSweepDir(dir);
  std::vector<std::string> problems;
  const std::pair<const char*, std::string> expected[] = {
      {"summary.csv", FormatSummaryCsv(fresh)}, {"curve.csv", FormatCurveCsv(fresh.curve)}};
  for (const auto& [name, text] : expected) {
    if (!fs::exists(dir / name)) {
      problems.push_back(std::string(name) + " is missing");
    } else if (ReadTextFile(dir / name) != text) {
      problems.push_back(std::string(name) + " differs from the per-run CSVs");
    }
  }
  return problems;
}

// --------------------------------------------------------------------- igm

IgmReport CheckIgmTable(const JointTable& table, std::optional<JointAction> a_star, double tol) {
  IgmReport r;
  r.normalized = NormalizeToMax(table);
  r.a_star = a_star ? *a_star : table.Argmax();
  r.conditions = CheckAdvantageConditions(r.normalized, r.a_star, tol);
  std::vector<std::vector<double>> agents(table.n_agents(), std::vector<double>(table.n_actions(), -1.0));
  for (std::size_t i = 0; i < table.n_agents(); ++i) agents[i][r.a_star[i]] = 0.0;
  r.igm = IgmCheck(r.normalized, agents);
  return r;
}

IgmReport CheckIgmModel(const FactorizationModel& model, ParamSet& params, const DecPomdp& env,
                        double tol) {
  const TabularValues tv = EvaluateTabular(model, params, env);
  IgmReport r;
  r.a_star = tv.greedy;
  r.normalized = tv.a_tot;
  r.conditions = CheckAdvantageConditions(tv.a_tot, tv.greedy, tol);
  r.igm = IgmCheck(tv.a_tot, tv.agent_advantage);
  return r;
}

// -------------------------------------------------------------- thresholds

std::vector<std::string> CheckThresholds(const SweepSummary& summary) {
  std::vector<std::string> failures;
  const std::size_t n = summary.seeds.size();
  auto need = [n](double fraction) {
    return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  };
  auto count = [&](const std::function<bool(const SeedSummary&)>& pred) {
    return static_cast<std::size_t>(std::count_if(summary.seeds.begin(), summary.seeds.end(), pred));
  };
  auto require_count = [&](const std::string& what, std::size_t got, std::size_t want) {
    if (got < want) {
      failures.push_back(what + ": " + std::to_string(got) + "/" + std::to_string(n) + " seeds, need " +
                         std::to_string(want));
    }
  };
  auto require_table = [&](const std::string& what, double limit, bool use_linf) {
    for (const SeedSummary& s : summary.seeds) {
      if (!s.success || !s.table) continue;
      const double err = use_linf ? s.table->linf : s.table->rmse;
      if (err > limit) {
        failures.push_back(what + " of seed " + std::to_string(s.seed) + " is " + FormatDouble(err) +
                           " > " + FormatDouble(limit));
      }
    }
  };
  const bool matrix = summary.env == "matrix3" || summary.env == "matrix21";
  const Variant v = summary.variant;
  if (summary.env == "matrix3" && v == Variant::kQFree) {
    require_count("optimal runs", summary.successes(), need(0.9));
    require_table("q_tot linf error", 0.5, true);
  } else if (summary.env == "matrix21" && v == Variant::kQFree) {
    require_count("optimal runs", summary.successes(), need(0.75));
    require_table("q_tot rmse", 1.5, false);
  } else if (matrix && (v == Variant::kQmix || v == Variant::kVdn)) {
    require_count("runs missing the optimum with negative Q_tot there",
                  count([](const SeedSummary& s) {
                    return s.greedy && s.optimal && *s.greedy != *s.optimal && s.qtot_at_optimum &&
                           *s.qtot_at_optimum < 0.0;
                  }),
                  need(0.9));
  } else if (summary.env == "matrix21" && v == Variant::kQFreeSum) {
    require_count("runs missing the optimum", count([](const SeedSummary& s) {
                    return s.greedy && s.optimal && *s.greedy != *s.optimal;
                  }),
                  need(0.75));
  } else if (summary.env == "memory_pair" && v == Variant::kQFree) {
    require_count("runs with final return >= 0.9",
                  count([](const SeedSummary& s) { return s.final_return >= 0.9; }), need(0.75));
  }
  return failures;
}

}  // namespace qfree
