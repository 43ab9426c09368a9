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

// Joint action-value factorization.
//
// Every agent runs a recurrent dueling network producing V_i and a
// max-normalized advantage A_i (so max_a A_i = 0 and max_a Q_i = V_i). The
// qfree family rescales each agent's pair through a transformation network,
//   V_i' = w_i(z) V_i + b_i(z),   A_i' = w_i(z) A_i,
// and mixes them with two unconstrained feedforward networks,
//   V_tot = f_v(V_1', ..., V_n'),  A_tot = f_a(A_1', ..., A_n'),
//   Q_tot = V_tot + A_tot.
// The baselines (VDN sum, QMIX monotone hypernetwork, independent learners)
// share the same agent networks.

#ifndef QFREE_FACTORIZATION_H_
#define QFREE_FACTORIZATION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qfree/autodiff.h"
#include "qfree/env.h"
#include "qfree/episode.h"
#include "qfree/joint_table.h"
#include "qfree/nn.h"

namespace qfree {

enum class Variant { kQFree, kQFreeSum, kQFreeAblation, kVdn, kQmix, kIql };

std::string VariantName(Variant v);
// Throws std::invalid_argument on an unknown name.
Variant ParseVariant(const std::string& name);
// qfree, qfree_sum and qfree_ablation: dueling transform + V/A mixers.
bool IsQFreeFamily(Variant v);

struct ModelConfig {
  std::size_t n_agents = 2;
  std::size_t n_actions = 3;
  std::size_t obs_dim = 1;
  Variant variant = Variant::kQFree;
  std::size_t agent_hidden = 64;
  std::size_t mixer_hidden = 32;
  std::size_t transform_hidden = 32;
  std::size_t qmix_embed = 32;
  bool param_sharing = true;
  // Use the raw transform output as w_i instead of |.| + 1e-8.
  bool unconstrained_omega = false;
};

ModelConfig ModelConfigFor(const DecPomdp& env, Variant variant);

inline constexpr double kOmegaFloor = 1e-8;

// One time step of all agents for a batch of B episodes; rows are ordered
// (episode, agent).
struct AgentStep {
  Var value;      // [B*n x 1]
  Var advantage;  // [B*n x |A|], max over each row is exactly 0
  Var q;          // [B*n x |A|] = value + advantage
  Var hidden;     // [B*n x H]
};

struct MixOutput {
  Var v_tot;  // [B x 1]
  Var a_tot;  // [B x 1]
  Var q_tot;  // [B x 1]
};

class FactorizationModel {
 public:
  FactorizationModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  std::size_t agent_input_dim() const;
  std::size_t joint_info_dim() const { return config_.n_agents * config_.obs_dim; }

  Var InitialHidden(Graph& g, std::size_t batch) const;

  // Agent networks for one step. `obs_rows` is [B*n x obs_dim]. Any
  // ParamSet with this model's structure may be passed (e.g. a target copy).
  AgentStep AgentForward(Graph& g, ParamSet& params, const Tensor& obs_rows, Var hidden) const;

  // Per-agent scalars of the transformation network for [B x J] inputs:
  // returns (w [B x n], b [B x n]).
  std::pair<Var, Var> TransformWeights(Graph& g, ParamSet& params, Var joint_info) const;
  // (V_i, A_i) -> (w V_i + b, w A_i), all [B x n].
  std::pair<Var, Var> Transform(Graph& g, ParamSet& params, Var v, Var a, Var joint_info) const;

  // Joint values from per-agent values of the chosen actions, all [B x n].
  MixOutput Mix(Graph& g, ParamSet& params, Var v, Var a, Var q, Var joint_info) const;

  // Gathers the chosen actions (B*n entries) from an agent step and mixes.
  MixOutput JointValues(Graph& g, ParamSet& params, const AgentStep& step,
                        std::span<const std::size_t> actions, Var joint_info) const;

  // Unrolls agent networks over slots 0..T of a batch from zero hidden state.
  // A positive history_window resets the hidden state every that many slots.
  std::vector<AgentStep> Unroll(Graph& g, ParamSet& params, const EpisodeBatch& batch,
                                std::size_t history_window = 0) const;

 private:
  std::string AgentPrefix(std::size_t agent) const;
  AgentStep SingleAgentForward(Graph& g, ParamSet& params, const std::string& prefix, Var x,
                               Var hidden) const;

  ModelConfig config_;
  ParamSet params_;
};

inline Var AssembleQtot(Var v_tot, Var a_tot) { return Add(v_tot, a_tot); }
inline double AssembleQtot(double v_tot, double a_tot) { return v_tot + a_tot; }

// Per-agent greedy actions from local Q rows, lowest index on ties.
JointAction GreedyJointAction(const std::vector<std::vector<double>>& q_rows);

// Decentralized execution: carries each agent's recurrent state across the
// steps of one episode and exposes local Q_i rows.
class AgentRunner {
 public:
  AgentRunner(const FactorizationModel& model, ParamSet& params, std::size_t history_window = 0);

  void Reset();
  // Advances the hidden state and returns one Q row per agent.
  std::vector<std::vector<double>> Step(const Observations& obs);

 private:
  const FactorizationModel& model_;
  ParamSet& params_;
  std::size_t history_window_;
  std::size_t t_ = 0;
  Tensor hidden_;
};

// Q_tot, A_tot and per-agent rows of a single-step tabular game evaluated at
// its fixed initial observation.
struct TabularValues {
  JointTable q_tot;
  JointTable a_tot;
  std::vector<std::vector<double>> agent_q;
  std::vector<std::vector<double>> agent_advantage;
  JointAction greedy;
};

// Throws std::invalid_argument for non-tabular environments.
TabularValues EvaluateTabular(const FactorizationModel& model, ParamSet& params,
                              const DecPomdp& env);
JointTable QtotTable(const FactorizationModel& model, ParamSet& params, const DecPomdp& env);

// ---- Advantage-based IGM checks (pure functions) ----

struct AdvantageConditionResult {
  double eq_residual = 0.0;    // |A_tot(a*)|
  double max_violation = 0.0;  // max over a != a* of max(A_tot(a), 0)
  bool holds = false;          // both <= tol
};

// Throws std::out_of_range when a_star is not a cell of the table.
AdvantageConditionResult CheckAdvantageConditions(const JointTable& a_tot, std::span<const std::size_t> a_star,
                             double tol);

// True iff the joint argmax of A_tot equals the tuple of per-agent argmaxes.
// Assumes unique maxima.
bool IgmCheck(const JointTable& a_tot, const std::vector<std::vector<double>>& agent_advantages);

// Subtracts the maximum so the best cell is exactly 0.
JointTable NormalizeToMax(const JointTable& table);

}  // namespace qfree

#endif  // QFREE_FACTORIZATION_H_
