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

#include "qfree/training.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace qfree {

std::string RegularizerStatesName(RegularizerStates s) {
  switch (s) {
    case RegularizerStates::kNext: return "next";
    case RegularizerStates::kCurrent: return "current";
    case RegularizerStates::kBoth: return "both";
  }
  return "unknown";
}

RegularizerStates ParseRegularizerStates(const std::string& name) {
  for (auto s : {RegularizerStates::kNext, RegularizerStates::kCurrent, RegularizerStates::kBoth}) {
    if (RegularizerStatesName(s) == name) return s;
  }
  throw std::invalid_argument("unknown regularizer states '" + name +
                              "' (expected next | current | both)");
}

void TrainConfig::Validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must be in [0, 1)");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) fail("epsilon_start must be in [0, 1]");
  if (!(epsilon_end >= 0.0 && epsilon_end <= epsilon_start)) {
    fail("epsilon_end must be in [0, epsilon_start]");
  }
  if (epsilon_anneal_steps < 0) fail("epsilon_anneal_steps must be >= 0");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (batch_episodes == 0) fail("batch_episodes must be positive");
  if (buffer_capacity < batch_episodes) fail("buffer_capacity must hold at least one batch");
  if (target_update_interval <= 0) fail("target_update_interval must be positive");
  if (!(v1 >= 0.0) || !(v2 >= 0.0)) fail("regularizer weights must be >= 0");
  if (total_steps <= 0) fail("total_steps must be positive");
  if (!(uniform_explore >= 0.0 && uniform_explore <= 1.0)) fail("uniform_explore must be in [0, 1]");
  if (log_interval <= 0) fail("log_interval must be positive");
  if (test_episodes == 0) fail("test_episodes must be positive");
  if (eval_window == 0) fail("eval_window must be positive");
}

TrainConfig DefaultTrainConfig(const std::string& env_name, Variant variant) {
  TrainConfig c;
  c.variant = variant;
  if (env_name == "matrix3") {
    c.total_steps = 20000;
    c.epsilon_anneal_steps = 2000;
    c.uniform_explore = 0.1;
  } else if (env_name == "matrix21") {
    c.total_steps = 8000;
    c.epsilon_anneal_steps = 2000;
    c.uniform_explore = 0.1;
  } else if (env_name == "memory_pair") {
    c.total_steps = 50000;
    c.epsilon_anneal_steps = 50000;
    c.test_episodes = 32;
  } else {
    throw std::invalid_argument("unknown environment '" + env_name + "'");
  }
  if (variant == Variant::kQFreeAblation) {
    c.v1 = 0.0;
    c.v2 = 0.0;
  }
  return c;
}

double EpsilonAt(const TrainConfig& config, std::int64_t env_step) {
  if (config.epsilon_anneal_steps <= 0 || env_step >= config.epsilon_anneal_steps) {
    return config.epsilon_end;
  }
  const double frac =
      static_cast<double>(std::max<std::int64_t>(env_step, 0)) / config.epsilon_anneal_steps;
  return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start);
}

std::size_t ActEpsilonGreedy(std::span<const double> q_row, double epsilon, Rng& rng) {
  if (q_row.empty()) throw std::invalid_argument("epsilon-greedy: empty action row");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("epsilon-greedy: epsilon must be in [0, 1]");
  }
  if (epsilon > 0.0 && rng.Uniform() < epsilon) return static_cast<std::size_t>(rng.UniformInt(q_row.size()));
  return ArgmaxFirst(q_row);
}

// ------------------------------------------------------------------ replay

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
  if (capacity == 0) throw std::invalid_argument("replay buffer: capacity must be positive");
  episodes_.reserve(std::min<std::size_t>(capacity, 1024));
}

void ReplayBuffer::Add(Episode episode) {
  if (episodes_.size() < capacity_) {
    episodes_.push_back(std::move(episode));
  } else {
    episodes_[next_] = std::move(episode);
  }
  next_ = (next_ + 1) % capacity_;
}

EpisodeBatch ReplayBuffer::Sample(std::size_t n) {
  if (!CanSample(n)) {
    throw std::logic_error("replay buffer: cannot sample " + std::to_string(n) + " episodes from " +
                           std::to_string(episodes_.size()));
  }
  std::vector<std::size_t> index(episodes_.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
  std::vector<Episode> picked;
  picked.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng_.UniformInt(index.size() - k));
    std::swap(index[k], index[j]);
    picked.push_back(episodes_[index[k]]);
  }
  return EpisodeBatch(std::move(picked));
}

// ----------------------------------------------------------------- targets

std::vector<std::vector<std::size_t>> GreedyActions(const std::vector<AgentStep>& steps,
                                                    std::size_t n_actions) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(steps.size());
  for (const AgentStep& s : steps) {
    const Tensor& q = s.q.value();
    if (q.cols() != n_actions) throw DimensionError("greedy actions: action width mismatch");
    std::vector<std::size_t> row(q.rows());
    for (std::size_t r = 0; r < q.rows(); ++r) {
      row[r] = ArgmaxFirst(std::span<const double>(q.data().data() + r * n_actions, n_actions));
    }
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

// True when some valid, non-terminal step needs a bootstrapped value.
bool NeedsBootstrap(const EpisodeBatch& batch, double gamma) {
  if (gamma == 0.0) return false;
  for (const Episode& e : batch.episodes()) {
    for (std::size_t t = 0; t < e.steps; ++t) {
      if (e.mask[t] > 0.0 && e.done[t] == 0.0) return true;
    }
  }
  return false;
}

}  // namespace

Tensor TdTargets(const FactorizationModel& model, ParamSet& online, ParamSet& target,
                 const EpisodeBatch& batch, const TrainConfig& config) {
  Graph g(/*record_gradients=*/false);
  auto steps = model.Unroll(g, online, batch, config.history_window);
  return TdTargets(model, target, batch, config, GreedyActions(steps, model.config().n_actions));
}

Tensor TdTargets(const FactorizationModel& model, ParamSet& target, const EpisodeBatch& batch,
                 const TrainConfig& config,
                 const std::vector<std::vector<std::size_t>>& greedy_actions) {
  const std::size_t b_size = batch.batch();
  const std::size_t steps = batch.steps();
  const std::size_t n = model.config().n_agents;
  const bool independent = model.config().variant == Variant::kIql;
  if (greedy_actions.size() != steps + 1) {
    throw DimensionError("td targets: need greedy actions for every slot");
  }
  const std::size_t rows_per_episode = independent ? n : 1;
  Tensor y({b_size * rows_per_episode, steps});

  Graph g(/*record_gradients=*/false);
  std::vector<AgentStep> target_steps;
  const bool bootstrap = NeedsBootstrap(batch, config.gamma);
  if (bootstrap) target_steps = model.Unroll(g, target, batch, config.history_window);

  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor r = batch.Rewards(t);
    const Tensor done = batch.Done(t);
    std::vector<double> next(b_size * rows_per_episode, 0.0);
    if (bootstrap) {
      const AgentStep& s = target_steps[t + 1];
      if (independent) {
        const Tensor& q = s.q.value();
        const std::size_t a = model.config().n_actions;
        for (std::size_t k = 0; k < b_size * n; ++k) next[k] = q[k * a + greedy_actions[t + 1][k]];
      } else {
        Var info = g.Constant(batch.JointInfo(t + 1));
        MixOutput mix = model.JointValues(g, target, s, greedy_actions[t + 1], info);
        for (std::size_t b = 0; b < b_size; ++b) next[b] = mix.q_tot.value()[b];
      }
    }
    for (std::size_t k = 0; k < b_size * rows_per_episode; ++k) {
      const std::size_t b = k / rows_per_episode;
      y.at(k, t) = r[b] + config.gamma * (1.0 - done[b]) * next[k];
    }
  }
  return y;
}

// -------------------------------------------------------------------- loss

namespace {

Tensor ColumnOf(const Tensor& m, std::size_t col) {
  Tensor out({m.rows(), 1});
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = m.at(r, col);
  return out;
}

// Each mask entry repeated `times` times: [B x 1] -> [B*times x 1].
Tensor RepeatRows(const Tensor& col, std::size_t times) {
  Tensor out({col.rows() * times, 1});
  for (std::size_t k = 0; k < out.rows(); ++k) out[k] = col[k / times];
  return out;
}

Var InequalityPenalty(Var a_tot, bool literal_min) {
  return Square(Relu(literal_min ? Neg(a_tot) : a_tot));
}

Var MaskedMean(std::vector<Var>& masked_terms, double mask_total) {
  return ScalarMul(Sum(Concat(masked_terms, 0)), 1.0 / mask_total);
}

double MaskedMeanValue(const std::vector<double>& values, const std::vector<double>& mask,
                       double mask_total) {
  double total = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) total += values[k] * mask[k];
  return total / mask_total;
}

// Selection matrix copying each of B groups of `group` rows `reps` times:
// row (b, j, i) of the result is row (b, i) of the input.
Tensor ReplicationMatrix(std::size_t batch, std::size_t group, std::size_t reps) {
  Tensor s({batch * reps * group, batch * group});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < reps; ++j) {
      for (std::size_t i = 0; i < group; ++i) s.at((b * reps + j) * group + i, b * group + i) = 1.0;
    }
  }
  return s;
}

constexpr std::size_t kMaxReplicatedJointActions = 4096;

// Sum of the inequality penalty over every joint action at one slot: [B x 1].
Var AllActionsPenalty(Graph& g, const FactorizationModel& model, ParamSet& params,
                      const AgentStep& step, Var joint_info, std::size_t batch, bool literal_min) {
  const std::size_t n = model.config().n_agents;
  const JointTable layout(n, model.config().n_actions);
  const std::size_t cells = layout.size();
  if (cells > kMaxReplicatedJointActions) {
    throw std::invalid_argument("all-action penalty: joint action space too large");
  }
  Var agents = g.Constant(ReplicationMatrix(batch, n, cells));
  Var episodes = g.Constant(ReplicationMatrix(batch, 1, cells));
  AgentStep replicated{MatMul(agents, step.value), MatMul(agents, step.advantage),
                       MatMul(agents, step.q), step.hidden};
  std::vector<std::size_t> actions(batch * cells * n);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < cells; ++j) {
      const JointAction a = layout.Decode(j);
      for (std::size_t i = 0; i < n; ++i) actions[(b * cells + j) * n + i] = a[i];
    }
  }
  MixOutput mix =
      model.JointValues(g, params, replicated, actions, MatMul(episodes, joint_info));
  return SumAxis(Reshape(InequalityPenalty(mix.a_tot, literal_min), {batch, cells}), 1);
}

}  // namespace

LossTerms ComputeLoss(Graph& g, const FactorizationModel& model, ParamSet& online,
                      ParamSet& target, const EpisodeBatch& batch, const TrainConfig& config) {
  if (!(config.v1 >= 0.0) || !(config.v2 >= 0.0)) {
    throw std::invalid_argument("loss: regularizer weights must be >= 0");
  }
  const std::size_t b_size = batch.batch();
  const std::size_t steps = batch.steps();
  const std::size_t n = model.config().n_agents;
  const Variant variant = model.config().variant;
  const double mask_total = batch.MaskTotal();
  if (mask_total <= 0.0) throw std::invalid_argument("loss: batch has no valid steps");

  std::vector<AgentStep> unrolled = model.Unroll(g, online, batch, config.history_window);
  const auto greedy = GreedyActions(unrolled, model.config().n_actions);
  const Tensor y = TdTargets(model, target, batch, config, greedy);

  LossTerms out;
  if (variant == Variant::kIql) {
    std::vector<Var> td_terms;
    for (std::size_t t = 0; t < steps; ++t) {
      const std::vector<std::size_t> actions = batch.Actions(t);
      Var q = Gather(unrolled[t].q, actions);
      Var err = Sub(g.Constant(ColumnOf(y, t)), q);
      td_terms.push_back(Mul(Square(err), g.Constant(RepeatRows(batch.Mask(t), n))));
    }
    out.td_loss = MaskedMean(td_terms, mask_total * static_cast<double>(n));
    out.loss = out.td_loss;
    return out;
  }

  std::vector<Var> info(steps + 1);
  for (std::size_t t = 0; t <= steps; ++t) info[t] = g.Constant(batch.JointInfo(t));

  std::vector<double> mask_values;
  mask_values.reserve(b_size * steps);
  std::vector<Var> td_terms, eq_next, ineq_next, eq_current, ineq_current;
  std::vector<double> diag_eq_next, diag_ineq_next, diag_eq_current, diag_ineq_current;
  const bool regularized = IsQFreeFamily(variant);
  const bool literal_min = config.literal_min_penalty;

  auto record = [](std::vector<double>& dst, Var v, bool absolute) {
    for (double x : v.value().data()) dst.push_back(absolute ? std::abs(x) : x);
  };

  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor mask_t = batch.Mask(t);
    for (double m : mask_t.data()) mask_values.push_back(m);
    Var mask = g.Constant(mask_t);
    const std::vector<std::size_t> actions = batch.Actions(t);

    MixOutput mix = model.JointValues(g, online, unrolled[t], actions, info[t]);
    td_terms.push_back(Mul(Square(Sub(g.Constant(ColumnOf(y, t)), mix.q_tot)), mask));

    // Successor histories z' (slot t + 1), evaluated with the replayed action
    // and the online greedy action there.
    Var star_next = model.JointValues(g, online, unrolled[t + 1], greedy[t + 1], info[t + 1]).a_tot;
    Var replay_next = model.JointValues(g, online, unrolled[t + 1], actions, info[t + 1]).a_tot;
    Var pen_next = config.ineq_all_actions
                       ? AllActionsPenalty(g, model, online, unrolled[t + 1], info[t + 1], b_size,
                                           literal_min)
                       : InequalityPenalty(replay_next, literal_min);
    // Current histories z (slot t).
    Var star_current = model.JointValues(g, online, unrolled[t], greedy[t], info[t]).a_tot;
    Var pen_current = config.ineq_all_actions
                          ? AllActionsPenalty(g, model, online, unrolled[t], info[t], b_size,
                                              literal_min)
                          : InequalityPenalty(mix.a_tot, literal_min);

    record(diag_eq_next, star_next, true);
    record(diag_ineq_next, pen_next, false);
    record(diag_eq_current, star_current, true);
    record(diag_ineq_current, pen_current, false);

    eq_next.push_back(Mul(Square(star_next), mask));
    ineq_next.push_back(Mul(pen_next, mask));
    eq_current.push_back(Mul(Square(star_current), mask));
    ineq_current.push_back(Mul(pen_current, mask));
  }

  out.td_loss = MaskedMean(td_terms, mask_total);
  out.loss = out.td_loss;
  out.eq_residual_next = MaskedMeanValue(diag_eq_next, mask_values, mask_total);
  out.ineq_penalty_next = MaskedMeanValue(diag_ineq_next, mask_values, mask_total);
  out.eq_residual_current = MaskedMeanValue(diag_eq_current, mask_values, mask_total);
  out.ineq_penalty_current = MaskedMeanValue(diag_ineq_current, mask_values, mask_total);
  if (!regularized) return out;

  const bool use_next = config.reg_states != RegularizerStates::kCurrent;
  const bool use_current = config.reg_states != RegularizerStates::kNext;
  std::vector<Var> eq_parts, ineq_parts;
  if (use_next) {
    eq_parts.push_back(MaskedMean(eq_next, mask_total));
    ineq_parts.push_back(MaskedMean(ineq_next, mask_total));
  }
  if (use_current) {
    eq_parts.push_back(MaskedMean(eq_current, mask_total));
    ineq_parts.push_back(MaskedMean(ineq_current, mask_total));
  }
  Var eq = eq_parts.size() == 1 ? eq_parts[0] : Add(eq_parts[0], eq_parts[1]);
  Var ineq = ineq_parts.size() == 1 ? ineq_parts[0] : Add(ineq_parts[0], ineq_parts[1]);
  out.eq_penalty = eq.value().item();
  out.ineq_penalty = ineq.value().item();
  // Terms with zero weight are left out so the loss is then exactly the TD loss.
  if (config.v1 > 0.0) out.loss = Add(out.loss, ScalarMul(eq, config.v1));
  if (config.v2 > 0.0) out.loss = Add(out.loss, ScalarMul(ineq, config.v2));
  return out;
}

// ----------------------------------------------------------------- trainer

namespace {

ModelConfig TrainerModelConfig(const DecPomdp& env, const TrainConfig& config) {
  ModelConfig m = ModelConfigFor(env, config.variant);
  m.param_sharing = config.param_sharing;
  m.unconstrained_omega = config.unconstrained_omega;
  return m;
}

const TrainConfig& Validated(const TrainConfig& config) {
  config.Validate();
  return config;
}

constexpr std::uint64_t kParamStream = 0;
constexpr std::uint64_t kExploreStream = 2;
constexpr std::uint64_t kBufferStream = 4;

}  // namespace

Trainer::Trainer(std::unique_ptr<DecPomdp> env, TrainConfig config,
                 std::unique_ptr<DecPomdp> test_env)
    : env_(std::move(env)),
      test_env_(std::move(test_env)),
      config_(Validated(config)),
      model_(TrainerModelConfig(*env_, config_), Rng::Derive(config_.seed, kParamStream)),
      target_(model_.params()),
      optimizer_(AdamConfig{config_.learning_rate}),
      buffer_(config_.buffer_capacity, Rng::Derive(config_.seed, kBufferStream)),
      explore_rng_(Rng::Derive(config_.seed, kExploreStream)) {
  if (!test_env_) test_env_ = env_->Clone();
  for (auto& [path, tensor] : target_) tensor.ClearGrad();
}

Episode Trainer::PlayEpisode(DecPomdp& env, bool greedy) {
  const std::size_t n = env.n_agents();
  Episode episode(env.episode_limit(), n, env.obs_dim());
  AgentRunner runner(model_, model_.params(), config_.history_window);
  Observations obs = env.Reset();
  episode.SetObservations(0, obs);
  const bool uniform =
      !greedy && config_.uniform_explore > 0.0 && explore_rng_.Bernoulli(config_.uniform_explore);
  JointAction actions(n);
  for (std::size_t t = 0; t < env.episode_limit(); ++t) {
    const auto q_rows = runner.Step(obs);
    const double epsilon = greedy ? 0.0 : EpsilonAt(config_, env_steps_);
    for (std::size_t i = 0; i < n; ++i) {
      if (uniform) {
        actions[i] = static_cast<std::size_t>(explore_rng_.UniformInt(env.n_actions()));
      } else if (greedy) {
        actions[i] = ArgmaxFirst(q_rows[i]);
      } else {
        actions[i] = ActEpsilonGreedy(q_rows[i], epsilon, explore_rng_);
      }
    }
    StepResult result = env.Step(actions);
    episode.Record(t, actions, result.reward, result.done);
    episode.SetObservations(t + 1, result.next_obs);
    if (!greedy) ++env_steps_;
    obs = std::move(result.next_obs);
    if (result.done) break;
  }
  return episode;
}

double Trainer::CollectEpisode() {
  Episode episode = PlayEpisode(*env_, /*greedy=*/false);
  const double episode_return = episode.episode_return;
  buffer_.Add(std::move(episode));
  ++episodes_;
  return episode_return;
}

std::optional<TrainMetrics> Trainer::TrainStep() {
  if (!buffer_.CanSample(config_.batch_episodes)) return std::nullopt;
  const EpisodeBatch batch = buffer_.Sample(config_.batch_episodes);
  ParamSet& online = model_.params();
  online.ZeroGrad();
  Graph g;
  LossTerms terms = ComputeLoss(g, model_, online, target_, batch, config_);
  g.Backward(terms.loss);
  TrainMetrics m;
  m.loss = terms.loss.value().item();
  m.td_loss = terms.td_loss.value().item();
  m.eq_residual = terms.eq_residual_next;
  m.ineq_penalty = terms.ineq_penalty_next;
  m.eq_residual_current = terms.eq_residual_current;
  m.ineq_penalty_current = terms.ineq_penalty_current;
  m.grad_norm = config_.grad_clip > 0.0 ? ClipGradNorm(online, config_.grad_clip)
                                        : ClipGradNorm(online, std::numeric_limits<double>::infinity());
  optimizer_.Step(online);
  ++train_steps_;
  if (train_steps_ % config_.target_update_interval == 0) HardCopy(online, target_);
  return m;
}

double Trainer::EvaluateGreedy() {
  double total = 0.0;
  for (std::size_t k = 0; k < config_.test_episodes; ++k) {
    total += PlayEpisode(*test_env_, /*greedy=*/true).episode_return;
  }
  return total / static_cast<double>(config_.test_episodes);
}

RunReport Trainer::Run() {
  RunReport report;
  report.env_name = env_->name();
  report.variant = config_.variant;
  report.seed = config_.seed;
  report.optimal_return = env_->optimal_return();

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::int64_t next_log = config_.log_interval;
  TrainMetrics sum;
  std::int64_t count = 0;
  while (env_steps_ < config_.total_steps) {
    report.episode_returns.push_back(CollectEpisode());
    if (auto m = TrainStep()) {
      sum.loss += m->loss;
      sum.td_loss += m->td_loss;
      sum.eq_residual += m->eq_residual;
      sum.ineq_penalty += m->ineq_penalty;
      ++count;
    }
    while (next_log <= env_steps_ && next_log <= config_.total_steps) {
      MetricsRow row;
      row.env_step = next_log;
      row.episode = episodes_;
      row.train_step = train_steps_;
      row.mean_return = EvaluateGreedy();
      const double c = static_cast<double>(count);
      row.loss = count > 0 ? sum.loss / c : nan;
      row.td_loss = count > 0 ? sum.td_loss / c : nan;
      row.eq_residual = count > 0 ? sum.eq_residual / c : nan;
      row.ineq_penalty = count > 0 ? sum.ineq_penalty / c : nan;
      row.epsilon = EpsilonAt(config_, next_log);
      row.seed = config_.seed;
      report.rows.push_back(row);
      sum = TrainMetrics{};
      count = 0;
      next_log += config_.log_interval;
    }
  }

  const std::size_t window = std::min(config_.eval_window, report.rows.size());
  if (window > 0) {
    double total = 0.0;
    for (std::size_t k = report.rows.size() - window; k < report.rows.size(); ++k) {
      total += report.rows[k].mean_return;
    }
    report.final_window_return = total / static_cast<double>(window);
  } else {
    report.final_window_return = EvaluateGreedy();
  }
  if (const MatrixGame* game = env_->AsMatrixGame()) {
    report.tabular = EvaluateTabular(model_, model_.params(), *env_);
    report.optimal_action = game->optimal_action();
  }
  report.params = model_.params();
  for (auto& [path, tensor] : report.params) tensor.ClearGrad();
  report.success = IsSuccessfulRun(report);
  return report;
}

RunReport RunTraining(const std::string& env_name, const TrainConfig& config) {
  constexpr std::uint64_t kEnvStream = 1;
  constexpr std::uint64_t kTestEnvStream = 3;
  Trainer trainer(MakeEnv(env_name, Rng::Derive(config.seed, kEnvStream)), config,
                  MakeEnv(env_name, Rng::Derive(config.seed, kTestEnvStream)));
  return trainer.Run();
}

bool IsSuccessfulRun(const RunReport& report) {
  if (report.tabular && report.optimal_action) {
    return report.tabular->greedy == *report.optimal_action &&
           report.final_window_return >= report.optimal_return - 0.05;
  }
  return report.final_window_return >= report.optimal_return - 0.1;
}

}  // namespace qfree
