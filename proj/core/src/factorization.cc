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

#include "qfree/factorization.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qfree {

std::string VariantName(Variant v) {
  switch (v) {
    case Variant::kQFree: return "qfree";
    case Variant::kQFreeSum: return "qfree_sum";
    case Variant::kQFreeAblation: return "qfree_ablation";
    case Variant::kVdn: return "vdn";
    case Variant::kQmix: return "qmix";
    case Variant::kIql: return "iql";
  }
  return "unknown";
}

Variant ParseVariant(const std::string& name) {
  for (Variant v : {Variant::kQFree, Variant::kQFreeSum, Variant::kQFreeAblation, Variant::kVdn,
                    Variant::kQmix, Variant::kIql}) {
    if (VariantName(v) == name) return v;
  }
  throw std::invalid_argument("unknown algorithm variant '" + name +
                              "' (expected qfree | qfree_sum | qfree_ablation | vdn | qmix | iql)");
}

bool IsQFreeFamily(Variant v) {
  return v == Variant::kQFree || v == Variant::kQFreeSum || v == Variant::kQFreeAblation;
}

ModelConfig ModelConfigFor(const DecPomdp& env, Variant variant) {
  ModelConfig config;
  config.n_agents = env.n_agents();
  config.n_actions = env.n_actions();
  config.obs_dim = env.obs_dim();
  config.variant = variant;
  return config;
}

namespace {

bool HasMlpMixers(Variant v) { return v == Variant::kQFree || v == Variant::kQFreeAblation; }

}  // namespace

FactorizationModel::FactorizationModel(ModelConfig config, std::uint64_t seed)
    : config_(config) {
  if (config_.n_agents == 0 || config_.n_actions == 0 || config_.obs_dim == 0) {
    throw std::invalid_argument("model: agents, actions and observation width must be positive");
  }
  Rng rng(seed);
  const std::size_t hidden = config_.agent_hidden;
  const std::size_t n_nets = config_.param_sharing ? 1 : config_.n_agents;
  for (std::size_t i = 0; i < n_nets; ++i) {
    const std::string prefix = AgentPrefix(i);
    DenseLayer(prefix + ".fc", agent_input_dim(), hidden).Init(params_, rng);
    GruCell(prefix + ".rnn", hidden, hidden).Init(params_, rng);
    DenseLayer(prefix + ".value", hidden, 1).Init(params_, rng);
    DenseLayer(prefix + ".advantage", hidden, config_.n_actions).Init(params_, rng);
  }
  const std::size_t n = config_.n_agents;
  const std::size_t joint = joint_info_dim();
  if (IsQFreeFamily(config_.variant)) {
    DenseLayer("transform.hidden", joint, config_.transform_hidden).Init(params_, rng);
    DenseLayer("transform.omega", config_.transform_hidden, n).Init(params_, rng);
    DenseLayer("transform.bias", config_.transform_hidden, n).Init(params_, rng);
  }
  if (HasMlpMixers(config_.variant)) {
    DenseLayer("mixer.value.hidden", n, config_.mixer_hidden).Init(params_, rng);
    DenseLayer("mixer.value.out", config_.mixer_hidden, 1).Init(params_, rng);
    DenseLayer("mixer.advantage.hidden", n, config_.mixer_hidden).Init(params_, rng);
    DenseLayer("mixer.advantage.out", config_.mixer_hidden, 1).Init(params_, rng);
  }
  if (config_.variant == Variant::kQmix) {
    const std::size_t embed = config_.qmix_embed;
    DenseLayer("qmix.hyper_w1", joint, n * embed).Init(params_, rng);
    DenseLayer("qmix.hyper_b1", joint, embed).Init(params_, rng);
    DenseLayer("qmix.hyper_w2", joint, embed).Init(params_, rng);
    DenseLayer("qmix.state_value.hidden", joint, embed).Init(params_, rng);
    DenseLayer("qmix.state_value.out", embed, 1).Init(params_, rng);
  }
}

std::size_t FactorizationModel::agent_input_dim() const {
  return config_.obs_dim + (config_.param_sharing ? config_.n_agents : 0);
}

std::string FactorizationModel::AgentPrefix(std::size_t agent) const {
  return config_.param_sharing ? "agent" : "agent." + std::to_string(agent);
}

Var FactorizationModel::InitialHidden(Graph& g, std::size_t batch) const {
  return g.Constant(Tensor({batch * config_.n_agents, config_.agent_hidden}));
}

AgentStep FactorizationModel::SingleAgentForward(Graph& g, ParamSet& params,
                                                 const std::string& prefix, Var x,
                                                 Var hidden) const {
  const std::size_t h = config_.agent_hidden;
  Var features = DenseForward(g, params, prefix + ".fc", x, Activation::kRelu);
  Var next_hidden = GruCell(prefix + ".rnn", h, h).Step(g, params, features, hidden);
  Var value = DenseForward(g, params, prefix + ".value", next_hidden);
  Var raw_advantage = DenseForward(g, params, prefix + ".advantage", next_hidden);
  // A_i <- A_i - max_a' A_i, so the best action has advantage exactly 0.
  Var advantage = Sub(raw_advantage, MaxAxis(raw_advantage, 1));
  return {value, advantage, Add(value, advantage), next_hidden};
}

AgentStep FactorizationModel::AgentForward(Graph& g, ParamSet& params, const Tensor& obs_rows,
                                           Var hidden) const {
  const std::size_t n = config_.n_agents;
  const std::size_t d = config_.obs_dim;
  if (obs_rows.rank() != 2 || obs_rows.cols() != d || obs_rows.rows() % n != 0) {
    throw DimensionError("agent forward: observations " + ShapeString(obs_rows.shape()) +
                         " do not match " + std::to_string(n) + " agents x " + std::to_string(d));
  }
  const std::size_t batch = obs_rows.rows() / n;
  const std::size_t h = config_.agent_hidden;
  if (hidden.shape() != Shape{batch * n, h}) {
    throw DimensionError("agent forward: hidden state " + ShapeString(hidden.shape()));
  }

  if (config_.param_sharing) {
    // Observation followed by a one-hot agent id.
    Tensor x({batch * n, d + n});
    for (std::size_t r = 0; r < batch * n; ++r) {
      for (std::size_t k = 0; k < d; ++k) x.at(r, k) = obs_rows.at(r, k);
      x.at(r, d + r % n) = 1.0;
    }
    return SingleAgentForward(g, params, AgentPrefix(0), g.Constant(std::move(x)), hidden);
  }

  Var hidden_wide = Reshape(hidden, {batch, n * h});
  std::vector<Var> values, advantages, qs, hiddens;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor x({batch, d});
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t k = 0; k < d; ++k) x.at(b, k) = obs_rows.at(b * n + i, k);
    }
    AgentStep s = SingleAgentForward(g, params, AgentPrefix(i), g.Constant(std::move(x)),
                                     Slice(hidden_wide, 1, i * h, (i + 1) * h));
    values.push_back(s.value);
    advantages.push_back(s.advantage);
    qs.push_back(s.q);
    hiddens.push_back(s.hidden);
  }
  const std::size_t a = config_.n_actions;
  return {Reshape(Concat(values, 1), {batch * n, 1}),
          Reshape(Concat(advantages, 1), {batch * n, a}),
          Reshape(Concat(qs, 1), {batch * n, a}),
          Reshape(Concat(hiddens, 1), {batch * n, h})};
}

std::pair<Var, Var> FactorizationModel::TransformWeights(Graph& g, ParamSet& params,
                                                         Var joint_info) const {
  Var features = DenseForward(g, params, "transform.hidden", joint_info, Activation::kRelu);
  Var omega = DenseForward(g, params, "transform.omega", features);
  Var bias = DenseForward(g, params, "transform.bias", features);
  if (!config_.unconstrained_omega) omega = AddScalar(Abs(omega), kOmegaFloor);
  return {omega, bias};
}

std::pair<Var, Var> FactorizationModel::Transform(Graph& g, ParamSet& params, Var v, Var a,
                                                  Var joint_info) const {
  auto [omega, bias] = TransformWeights(g, params, joint_info);
  return {Add(Mul(omega, v), bias), Mul(omega, a)};
}

MixOutput FactorizationModel::Mix(Graph& g, ParamSet& params, Var v, Var a, Var q,
                                  Var joint_info) const {
  switch (config_.variant) {
    case Variant::kQFree:
    case Variant::kQFreeAblation: {
      auto [v_t, a_t] = Transform(g, params, v, a, joint_info);
      Var v_tot = DenseForward(
          g, params, "mixer.value.out",
          DenseForward(g, params, "mixer.value.hidden", v_t, Activation::kElu));
      Var a_tot = DenseForward(
          g, params, "mixer.advantage.out",
          DenseForward(g, params, "mixer.advantage.hidden", a_t, Activation::kElu));
      return {v_tot, a_tot, AssembleQtot(v_tot, a_tot)};
    }
    case Variant::kQFreeSum: {
      auto [v_t, a_t] = Transform(g, params, v, a, joint_info);
      Var v_tot = SumAxis(v_t, 1);
      Var a_tot = SumAxis(a_t, 1);
      return {v_tot, a_tot, AssembleQtot(v_tot, a_tot)};
    }
    case Variant::kVdn:
    case Variant::kIql: {
      Var q_tot = SumAxis(q, 1);
      Var v_tot = SumAxis(v, 1);
      return {v_tot, Sub(q_tot, v_tot), q_tot};
    }
    case Variant::kQmix: {
      const std::size_t n = config_.n_agents;
      const std::size_t embed = config_.qmix_embed;
      Var w1 = Abs(DenseForward(g, params, "qmix.hyper_w1", joint_info));
      Var pre = DenseForward(g, params, "qmix.hyper_b1", joint_info);
      for (std::size_t i = 0; i < n; ++i) {
        pre = Add(pre, Mul(Slice(q, 1, i, i + 1), Slice(w1, 1, i * embed, (i + 1) * embed)));
      }
      Var w2 = Abs(DenseForward(g, params, "qmix.hyper_w2", joint_info));
      Var v_tot = DenseForward(
          g, params, "qmix.state_value.out",
          DenseForward(g, params, "qmix.state_value.hidden", joint_info, Activation::kRelu));
      Var q_tot = Add(SumAxis(Mul(Elu(pre), w2), 1), v_tot);
      return {v_tot, Sub(q_tot, v_tot), q_tot};
    }
  }
  throw std::invalid_argument("unknown variant");
}

MixOutput FactorizationModel::JointValues(Graph& g, ParamSet& params, const AgentStep& step,
                                          std::span<const std::size_t> actions,
                                          Var joint_info) const {
  const std::size_t n = config_.n_agents;
  if (actions.size() % n != 0) throw DimensionError("joint values: action count not a multiple of n");
  const std::size_t batch = actions.size() / n;
  Var q = Reshape(Gather(step.q, actions), {batch, n});
  Var a = Reshape(Gather(step.advantage, actions), {batch, n});
  Var v = Reshape(step.value, {batch, n});
  return Mix(g, params, v, a, q, joint_info);
}

std::vector<AgentStep> FactorizationModel::Unroll(Graph& g, ParamSet& params,
                                                  const EpisodeBatch& batch,
                                                  std::size_t history_window) const {
  std::vector<AgentStep> steps;
  steps.reserve(batch.steps() + 1);
  Var hidden = InitialHidden(g, batch.batch());
  for (std::size_t t = 0; t <= batch.steps(); ++t) {
    if (t > 0 && history_window > 0 && t % history_window == 0) {
      hidden = InitialHidden(g, batch.batch());
    }
    steps.push_back(AgentForward(g, params, batch.ObsRows(t), hidden));
    hidden = steps.back().hidden;
  }
  return steps;
}

JointAction GreedyJointAction(const std::vector<std::vector<double>>& q_rows) {
  JointAction action;
  action.reserve(q_rows.size());
  for (const auto& row : q_rows) action.push_back(ArgmaxFirst(row));
  return action;
}

// ------------------------------------------------------------- AgentRunner

AgentRunner::AgentRunner(const FactorizationModel& model, ParamSet& params,
                         std::size_t history_window)
    : model_(model), params_(params), history_window_(history_window) {
  Reset();
}

void AgentRunner::Reset() {
  hidden_ = Tensor({model_.config().n_agents, model_.config().agent_hidden});
  t_ = 0;
}

std::vector<std::vector<double>> AgentRunner::Step(const Observations& obs) {
  const auto& cfg = model_.config();
  if (obs.size() != cfg.n_agents) throw DimensionError("agent runner: wrong agent count");
  Tensor rows({cfg.n_agents, cfg.obs_dim});
  for (std::size_t i = 0; i < cfg.n_agents; ++i) {
    if (obs[i].size() != cfg.obs_dim) throw DimensionError("agent runner: observation width");
    std::copy(obs[i].begin(), obs[i].end(), rows.mutable_data().begin() + i * cfg.obs_dim);
  }
  if (t_ > 0 && history_window_ > 0 && t_ % history_window_ == 0) {
    hidden_ = Tensor({cfg.n_agents, cfg.agent_hidden});
  }
  ++t_;
  Graph g(/*record_gradients=*/false);
  AgentStep step = model_.AgentForward(g, params_, rows, g.Constant(hidden_));
  hidden_ = step.hidden.value();
  const Tensor& q = step.q.value();
  std::vector<std::vector<double>> out(cfg.n_agents);
  for (std::size_t i = 0; i < cfg.n_agents; ++i) {
    out[i].assign(q.data().begin() + i * cfg.n_actions, q.data().begin() + (i + 1) * cfg.n_actions);
  }
  return out;
}

// ---------------------------------------------------------------- tabular

TabularValues EvaluateTabular(const FactorizationModel& model, ParamSet& params,
                              const DecPomdp& env) {
  const MatrixGame* game = env.AsMatrixGame();
  if (game == nullptr) {
    throw std::invalid_argument("Q_tot tables need a single-step tabular game, got " + env.name());
  }
  const auto& cfg = model.config();
  if (cfg.n_agents != env.n_agents() || cfg.n_actions != env.n_actions() ||
      cfg.obs_dim != env.obs_dim()) {
    throw DimensionError("model does not match environment " + env.name());
  }
  TabularValues out;
  out.q_tot = JointTable(cfg.n_agents, cfg.n_actions);
  out.a_tot = JointTable(cfg.n_agents, cfg.n_actions);
  const std::size_t cells = out.q_tot.size();
  const std::size_t n = cfg.n_agents;
  const Observations obs = game->ConstantObservations();

  Tensor rows({cells * n, cfg.obs_dim});
  std::vector<std::size_t> actions(cells * n);
  for (std::size_t j = 0; j < cells; ++j) {
    JointAction a = out.q_tot.Decode(j);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(obs[i].begin(), obs[i].end(), rows.mutable_data().begin() + (j * n + i) * cfg.obs_dim);
      actions[j * n + i] = a[i];
    }
  }
  Graph g(/*record_gradients=*/false);
  AgentStep step = model.AgentForward(g, params, rows, model.InitialHidden(g, cells));
  Var joint_info = g.Constant(Tensor({cells, n * cfg.obs_dim}, rows.storage()));
  MixOutput mix = model.JointValues(g, params, step, actions, joint_info);
  for (std::size_t j = 0; j < cells; ++j) {
    out.q_tot[j] = mix.q_tot.value()[j];
    out.a_tot[j] = mix.a_tot.value()[j];
  }
  const Tensor& q = step.q.value();
  const Tensor& adv = step.advantage.value();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t begin = i * cfg.n_actions;
    out.agent_q.emplace_back(q.data().begin() + begin, q.data().begin() + begin + cfg.n_actions);
    out.agent_advantage.emplace_back(adv.data().begin() + begin,
                                     adv.data().begin() + begin + cfg.n_actions);
  }
  out.greedy = GreedyJointAction(out.agent_q);
  return out;
}

JointTable QtotTable(const FactorizationModel& model, ParamSet& params, const DecPomdp& env) {
  return EvaluateTabular(model, params, env).q_tot;
}

// ----------------------------------------------------------------- checks

AdvantageConditionResult CheckAdvantageConditions(const JointTable& a_tot, std::span<const std::size_t> a_star,
                             double tol) {
  const std::size_t star = a_tot.Encode(a_star);
  AdvantageConditionResult r;
  r.eq_residual = std::abs(a_tot[star]);
  for (std::size_t j = 0; j < a_tot.size(); ++j) {
    if (j != star) r.max_violation = std::max(r.max_violation, std::max(a_tot[j], 0.0));
  }
  r.holds = r.eq_residual <= tol && r.max_violation <= tol;
  return r;
}

bool IgmCheck(const JointTable& a_tot, const std::vector<std::vector<double>>& agent_advantages) {
  if (agent_advantages.size() != a_tot.n_agents()) {
    throw std::invalid_argument("igm check: expected one advantage row per agent");
  }
  return a_tot.Argmax() == GreedyJointAction(agent_advantages);
}

JointTable NormalizeToMax(const JointTable& table) {
  const double max = table.Max();
  std::vector<double> values(table.values().begin(), table.values().end());
  for (double& v : values) v -= max;
  return JointTable(table.n_agents(), table.n_actions(), std::move(values));
}

}  // namespace qfree
