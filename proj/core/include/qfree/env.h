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

// Cooperative environments with local observations and one shared reward.

#ifndef QFREE_ENV_H_
#define QFREE_ENV_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qfree/joint_table.h"
#include "qfree/random.h"

namespace qfree {

// Per-agent observation vectors, each of length obs_dim.
using Observations = std::vector<std::vector<double>>;

struct StepResult {
  double reward = 0.0;
  bool done = false;
  Observations next_obs;
};

// Shared payoff of the 3x3 nonmonotonic game: 1 at (0,0), -12 when exactly
// one agent plays 0, otherwise 0.
double Matrix3Reward(std::size_t a1, std::size_t a2);

// Two-peak payoff over 21x21 actions:
//   f1 = 5 - ((15 - a1) / 3)^2 - ((5 - a2) / 3)^2
//   f2 = 10 - (5 - a1)^2 - (15 - a2)^2
//   R  = max(f1, f2)
double Matrix21Reward(std::size_t a1, std::size_t a2);

class MatrixGame;

class DecPomdp {
 public:
  virtual ~DecPomdp() = default;

  virtual std::string name() const = 0;
  virtual std::size_t n_agents() const = 0;
  virtual std::size_t n_actions() const = 0;
  virtual std::size_t obs_dim() const = 0;
  virtual std::size_t episode_limit() const = 0;
  virtual double gamma() const = 0;
  virtual double optimal_return() const = 0;

  virtual Observations Reset() = 0;
  // Throws std::logic_error when called after the episode finished and
  // std::out_of_range on invalid actions.
  virtual StepResult Step(std::span<const std::size_t> actions) = 0;

  virtual std::unique_ptr<DecPomdp> Clone() const = 0;

  // Non-null for single-step games with an enumerable payoff table.
  virtual const MatrixGame* AsMatrixGame() const { return nullptr; }

 protected:
  void ValidateActions(std::span<const std::size_t> actions) const;
};

// One-step cooperative game with a constant observation token.
class MatrixGame final : public DecPomdp {
 public:
  using Payoff = std::function<double(std::size_t, std::size_t)>;

  MatrixGame(std::string name, std::size_t n_actions, Payoff payoff);

  std::string name() const override { return name_; }
  std::size_t n_agents() const override { return 2; }
  std::size_t n_actions() const override { return n_actions_; }
  std::size_t obs_dim() const override { return 1; }
  std::size_t episode_limit() const override { return 1; }
  double gamma() const override { return 0.99; }
  double optimal_return() const override { return table_.Max(); }

  Observations Reset() override;
  StepResult Step(std::span<const std::size_t> actions) override;
  std::unique_ptr<DecPomdp> Clone() const override;
  const MatrixGame* AsMatrixGame() const override { return this; }

  double Reward(std::span<const std::size_t> actions) const;
  const JointTable& payoff_table() const { return table_; }
  JointAction optimal_action() const { return table_.Argmax(); }
  Observations ConstantObservations() const;

 private:
  std::string name_;
  std::size_t n_actions_;
  Payoff payoff_;
  JointTable table_;
  bool done_ = true;
};

std::unique_ptr<MatrixGame> MakeMatrix3();
std::unique_ptr<MatrixGame> MakeMatrix21();

// Two agents, two actions, two steps. Each agent privately sees a random bit
// (one-hot, obs_dim 2) at the first step and zeros afterwards. The team earns
// 1 at the second step iff both agents then play their own bit.
class MemoryPair final : public DecPomdp {
 public:
  explicit MemoryPair(std::uint64_t seed);

  std::string name() const override { return "memory_pair"; }
  std::size_t n_agents() const override { return 2; }
  std::size_t n_actions() const override { return 2; }
  std::size_t obs_dim() const override { return 2; }
  std::size_t episode_limit() const override { return 2; }
  double gamma() const override { return 0.99; }
  double optimal_return() const override { return 1.0; }

  Observations Reset() override;
  StepResult Step(std::span<const std::size_t> actions) override;
  std::unique_ptr<DecPomdp> Clone() const override;

  std::span<const std::size_t> bits() const { return bits_; }

 private:
  Observations ZeroObservations() const;

  Rng rng_;
  std::vector<std::size_t> bits_ = {0, 0};
  std::size_t t_ = 0;
  bool done_ = true;
};

// Names: matrix3 | matrix21 | memory_pair.
std::unique_ptr<DecPomdp> MakeEnv(const std::string& name, std::uint64_t seed);
bool IsKnownEnv(const std::string& name);

}  // namespace qfree

#endif  // QFREE_ENV_H_
