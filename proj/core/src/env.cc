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

#include "qfree/env.h"

#include <algorithm>
#include <stdexcept>

namespace qfree {

double Matrix3Reward(std::size_t a1, std::size_t a2) {
  if (a1 > 2 || a2 > 2) throw std::out_of_range("matrix3: actions must be in {0,1,2}");
  if (a1 == 0 && a2 == 0) return 1.0;
  if (a1 == 0 || a2 == 0) return -12.0;
  return 0.0;
}

double Matrix21Reward(std::size_t a1, std::size_t a2) {
  if (a1 > 20 || a2 > 20) throw std::out_of_range("matrix21: actions must be in {0..20}");
  const double x = static_cast<double>(a1);
  const double y = static_cast<double>(a2);
  const double f1 = 5.0 - ((15.0 - x) / 3.0) * ((15.0 - x) / 3.0) -
                    ((5.0 - y) / 3.0) * ((5.0 - y) / 3.0);
  const double f2 = 10.0 - (5.0 - x) * (5.0 - x) - (15.0 - y) * (15.0 - y);
  return std::max(f1, f2);
}

void DecPomdp::ValidateActions(std::span<const std::size_t> actions) const {
  if (actions.size() != n_agents()) {
    throw std::invalid_argument(name() + ": expected " + std::to_string(n_agents()) +
                                " actions, got " + std::to_string(actions.size()));
  }
  for (std::size_t a : actions) {
    if (a >= n_actions()) {
      throw std::out_of_range(name() + ": action " + std::to_string(a) + " out of range");
    }
  }
}

// -------------------------------------------------------------- MatrixGame

MatrixGame::MatrixGame(std::string name, std::size_t n_actions, Payoff payoff)
    : name_(std::move(name)), n_actions_(n_actions), payoff_(std::move(payoff)),
      table_(2, n_actions) {
  for (std::size_t flat = 0; flat < table_.size(); ++flat) {
    JointAction a = table_.Decode(flat);
    table_[flat] = payoff_(a[0], a[1]);
  }
}

Observations MatrixGame::ConstantObservations() const {
  return Observations(2, std::vector<double>{1.0});
}

Observations MatrixGame::Reset() {
  done_ = false;
  return ConstantObservations();
}

StepResult MatrixGame::Step(std::span<const std::size_t> actions) {
  if (done_) throw std::logic_error(name_ + ": step after episode end");
  ValidateActions(actions);
  done_ = true;
  return {Reward(actions), true, ConstantObservations()};
}

double MatrixGame::Reward(std::span<const std::size_t> actions) const {
  ValidateActions(actions);
  return table_.at(actions);
}

std::unique_ptr<DecPomdp> MatrixGame::Clone() const {
  return std::make_unique<MatrixGame>(*this);
}

std::unique_ptr<MatrixGame> MakeMatrix3() {
  return std::make_unique<MatrixGame>("matrix3", 3, Matrix3Reward);
}

std::unique_ptr<MatrixGame> MakeMatrix21() {
  return std::make_unique<MatrixGame>("matrix21", 21, Matrix21Reward);
}

// -------------------------------------------------------------- MemoryPair

MemoryPair::MemoryPair(std::uint64_t seed) : rng_(seed) {}

Observations MemoryPair::ZeroObservations() const {
  return Observations(2, std::vector<double>(2, 0.0));
}

Observations MemoryPair::Reset() {
  t_ = 0;
  done_ = false;
  Observations obs = ZeroObservations();
  for (std::size_t i = 0; i < 2; ++i) {
    bits_[i] = rng_.UniformInt(2);
    obs[i][bits_[i]] = 1.0;
  }
  return obs;
}

StepResult MemoryPair::Step(std::span<const std::size_t> actions) {
  if (done_) throw std::logic_error("memory_pair: step after episode end");
  ValidateActions(actions);
  if (t_ == 0) {
    t_ = 1;
    return {0.0, false, ZeroObservations()};
  }
  done_ = true;
  const bool recalled = actions[0] == bits_[0] && actions[1] == bits_[1];
  return {recalled ? 1.0 : 0.0, true, ZeroObservations()};
}

std::unique_ptr<DecPomdp> MemoryPair::Clone() const {
  return std::make_unique<MemoryPair>(*this);
}

// ---------------------------------------------------------------- registry

bool IsKnownEnv(const std::string& name) {
  return name == "matrix3" || name == "matrix21" || name == "memory_pair";
}

std::unique_ptr<DecPomdp> MakeEnv(const std::string& name, std::uint64_t seed) {
  if (name == "matrix3") return MakeMatrix3();
  if (name == "matrix21") return MakeMatrix21();
  if (name == "memory_pair") return std::make_unique<MemoryPair>(seed);
  throw std::invalid_argument("unknown environment '" + name +
                              "' (expected matrix3 | matrix21 | memory_pair)");
}

}  // namespace qfree
