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

#ifndef QFREE_TRAINING_H_
#define QFREE_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qfree/env.h"
#include "qfree/episode.h"
#include "qfree/factorization.h"
#include "qfree/nn.h"
#include "qfree/random.h"

namespace qfree {

// Histories at which the advantage regularizers are evaluated: the successor
// z' of every replayed step, the current z, or both.
enum class RegularizerStates { kNext, kCurrent, kBoth };

std::string RegularizerStatesName(RegularizerStates s);
RegularizerStates ParseRegularizerStates(const std::string& name);

struct TrainConfig {
  Variant variant = Variant::kQFree;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::int64_t epsilon_anneal_steps = 50000;
  double learning_rate = 5e-4;
  std::size_t batch_episodes = 32;
  std::size_t buffer_capacity = 5000;
  std::int64_t target_update_interval = 200;  // in train steps
  double v1 = 1.0;                            // equality regularizer weight
  double v2 = 1.0;                            // inequality regularizer weight
  std::int64_t total_steps = 50000;           // environment steps
  std::uint64_t seed = 0;
  // Recurrent state is reset every `history_window` steps; 0 keeps the full
  // episode history.
  std::size_t history_window = 0;
  double grad_clip = 10.0;  // global-norm clip, <= 0 disables
  // Probability that a training episode uses a uniformly random joint action.
  double uniform_explore = 0.0;
  // Penalize (min(A_tot, 0))^2 as printed instead of (max(A_tot, 0))^2.
  bool literal_min_penalty = false;
  bool param_sharing = true;
  bool unconstrained_omega = false;
  RegularizerStates reg_states = RegularizerStates::kNext;
  // Tabular diagnostics: apply the inequality penalty to every joint action.
  bool ineq_all_actions = false;
  std::int64_t log_interval = 100;  // environment steps between metric rows
  std::size_t test_episodes = 1;    // greedy episodes per metric row
  std::size_t eval_window = 10;     // trailing rows averaged for the final return

  // Throws std::invalid_argument on out-of-range values.
  void Validate() const;
};

// Defaults for a named environment (step budgets, exploration schedule).
TrainConfig DefaultTrainConfig(const std::string& env_name, Variant variant);

// Linear schedule from epsilon_start to epsilon_end.
double EpsilonAt(const TrainConfig& config, std::int64_t env_step);

// Argmax with probability 1 - epsilon (lowest index on ties), otherwise a
// uniformly random action.
std::size_t ActEpsilonGreedy(std::span<const double> q_row, double epsilon, Rng& rng);

class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);

  void Add(Episode episode);
  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool CanSample(std::size_t n) const { return n > 0 && episodes_.size() >= n; }
  // Distinct episodes chosen uniformly. Throws std::logic_error when fewer
  // than n episodes are stored.
  EpisodeBatch Sample(std::size_t n);

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Episode> episodes_;
  Rng rng_;
};

// Per-agent greedy actions of the online network at every slot 0..T,
// flattened per slot as (episode, agent).
std::vector<std::vector<std::size_t>> GreedyActions(const std::vector<AgentStep>& steps,
                                                    std::size_t n_actions);

// Double-DQN targets y[b, t] = r + gamma * (1 - done) * Q_tot(z', a_max; target),
// with a_max the online network's per-agent greedy actions at z'. Returns
// [B x T] (or [B*n x T] for independent learners). Never carries gradient.
Tensor TdTargets(const FactorizationModel& model, ParamSet& online, ParamSet& target,
                 const EpisodeBatch& batch, const TrainConfig& config);
Tensor TdTargets(const FactorizationModel& model, ParamSet& target, const EpisodeBatch& batch,
                 const TrainConfig& config,
                 const std::vector<std::vector<std::size_t>>& greedy_actions);

struct LossTerms {
  Var loss;
  Var td_loss;
  double eq_penalty = 0.0;    // masked mean A_tot(., a*)^2 over the penalized histories
  double ineq_penalty = 0.0;  // masked mean penalty(A_tot(., a))
  // Diagnostics at the successor histories z' and the current histories z.
  double eq_residual_next = 0.0;
  double ineq_penalty_next = 0.0;
  double eq_residual_current = 0.0;
  double ineq_penalty_current = 0.0;
};

// Masked mean TD error plus v1 * equality and v2 * inequality penalties
// (qfree family); plain TD loss for the baselines. Throws on negative v1/v2.
LossTerms ComputeLoss(Graph& g, const FactorizationModel& model, ParamSet& online,
                      ParamSet& target, const EpisodeBatch& batch, const TrainConfig& config);

struct TrainMetrics {
  double loss = 0.0;
  double td_loss = 0.0;
  double eq_residual = 0.0;
  double ineq_penalty = 0.0;
  double eq_residual_current = 0.0;
  double ineq_penalty_current = 0.0;
  double grad_norm = 0.0;
};

struct MetricsRow {
  std::int64_t env_step = 0;
  std::int64_t episode = 0;
  std::int64_t train_step = 0;
  double mean_return = 0.0;
  double loss = 0.0;
  double td_loss = 0.0;
  double eq_residual = 0.0;
  double ineq_penalty = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

struct RunReport {
  std::string env_name;
  Variant variant = Variant::kQFree;
  std::uint64_t seed = 0;
  std::vector<MetricsRow> rows;
  std::vector<double> episode_returns;
  double final_window_return = 0.0;
  double optimal_return = 0.0;
  std::optional<TabularValues> tabular;  // single-step games only
  std::optional<JointAction> optimal_action;
  bool success = false;
  ParamSet params;
};

// One complete training run: rollouts with epsilon-greedy exploration,
// replay, one train step per episode, periodic greedy evaluation.
class Trainer {
 public:
  // Greedy evaluation uses `test_env`, or a copy of `env` when null.
  Trainer(std::unique_ptr<DecPomdp> env, TrainConfig config,
          std::unique_ptr<DecPomdp> test_env = nullptr);

  const TrainConfig& config() const { return config_; }
  const FactorizationModel& model() const { return model_; }
  ParamSet& online() { return model_.params(); }
  ParamSet& target() { return target_; }
  ReplayBuffer& buffer() { return buffer_; }
  std::int64_t env_steps() const { return env_steps_; }
  std::int64_t train_steps() const { return train_steps_; }

  // Plays one episode; explores unless greedy. Returns the recorded episode.
  Episode PlayEpisode(DecPomdp& env, bool greedy);
  // Collects one exploratory episode into the replay buffer and returns its
  // return.
  double CollectEpisode();
  // One optimization step; nullopt (no parameter change) while the buffer
  // holds fewer than batch_episodes episodes.
  std::optional<TrainMetrics> TrainStep();
  double EvaluateGreedy();
  RunReport Run();

 private:
  std::unique_ptr<DecPomdp> env_;
  std::unique_ptr<DecPomdp> test_env_;
  TrainConfig config_;
  FactorizationModel model_;
  ParamSet target_;
  Adam optimizer_;
  ReplayBuffer buffer_;
  Rng explore_rng_;
  std::int64_t env_steps_ = 0;
  std::int64_t episodes_ = 0;
  std::int64_t train_steps_ = 0;
};

RunReport RunTraining(const std::string& env_name, const TrainConfig& config);

// Matrix games: final greedy joint action is the optimum and the final
// window return is within 0.05 of the optimal return. Other environments:
// final window return >= optimal - 0.1.
bool IsSuccessfulRun(const RunReport& report);

}  // namespace qfree

#endif  // QFREE_TRAINING_H_
