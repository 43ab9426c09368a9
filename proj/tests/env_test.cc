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

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "qfree/env.h"

namespace qfree {
namespace {

// Independent closed form of the 21-action reward.
double Reward21(double a1, double a2) {
  const double f1 = 5.0 - std::pow((15.0 - a1) / 3.0, 2) - std::pow((5.0 - a2) / 3.0, 2);
  const double f2 = 10.0 - std::pow(5.0 - a1, 2) - std::pow(15.0 - a2, 2);
  return std::max(f1, f2);
}

double StepOnce(DecPomdp& env, std::size_t a1, std::size_t a2) {
  env.Reset();
  const std::array<std::size_t, 2> actions{a1, a2};
  return env.Step(actions).reward;
}

TEST(Matrix3Test, MatchesHardCodedTable) {
  const double table[3][3] = {{1, -12, -12}, {-12, 0, 0}, {-12, 0, 0}};
  auto env = MakeMatrix3();
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      EXPECT_EQ(Matrix3Reward(a, b), table[a][b]);
      EXPECT_EQ(StepOnce(*env, a, b), table[a][b]);
    }
  }
  EXPECT_EQ(env->optimal_return(), 1.0);
  EXPECT_EQ(env->optimal_action(), (JointAction{0, 0}));
}

TEST(Matrix3Test, SingleStepEpisode) {
  auto env = MakeMatrix3();
  Observations obs = env->Reset();
  ASSERT_EQ(obs.size(), 2u);
  EXPECT_EQ(obs[0], std::vector<double>{1.0});
  const std::array<std::size_t, 2> actions{0, 0};
  StepResult r = env->Step(actions);
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_TRUE(r.done);
  EXPECT_THROW(env->Step(actions), std::logic_error);
}

TEST(Matrix3Test, OutOfRangeActionRejected) {
  EXPECT_THROW(Matrix3Reward(3, 0), std::out_of_range);
  auto env = MakeMatrix3();
  env->Reset();
  const std::array<std::size_t, 2> bad{0, 3};
  EXPECT_THROW(env->Step(bad), std::out_of_range);
  const std::array<std::size_t, 1> short_actions{0};
  EXPECT_THROW(env->Step(short_actions), std::invalid_argument);
}

TEST(Matrix21Test, ReferenceValues) {
  EXPECT_DOUBLE_EQ(Matrix21Reward(5, 15), 10.0);
  EXPECT_DOUBLE_EQ(Matrix21Reward(15, 5), 5.0);
  EXPECT_NEAR(Matrix21Reward(0, 0), 5.0 - 25.0 - 25.0 / 9.0, 1e-12);
  EXPECT_NEAR(Matrix21Reward(0, 0), -22.7777777777, 1e-9);
  EXPECT_THROW(Matrix21Reward(21, 0), std::out_of_range);
}

TEST(Matrix21Test, AgreesWithFormulaAndHasUniqueArgmax) {
  auto env = MakeMatrix21();
  std::size_t maxima = 0;
  for (std::size_t a = 0; a < 21; ++a) {
    for (std::size_t b = 0; b < 21; ++b) {
      const double expected = Reward21(static_cast<double>(a), static_cast<double>(b));
      EXPECT_NEAR(Matrix21Reward(a, b), expected, 1e-12);
      EXPECT_EQ(StepOnce(*env, a, b), Matrix21Reward(a, b));
      EXPECT_LE(expected, 10.0);
      if (expected == 10.0) {
        ++maxima;
        EXPECT_EQ(a, 5u);
        EXPECT_EQ(b, 15u);
      }
    }
  }
  EXPECT_EQ(maxima, 1u);
  EXPECT_EQ(env->optimal_action(), (JointAction{5, 15}));
  EXPECT_EQ(env->payoff_table().size(), 441u);
}

TEST(MemoryPairTest, TwoStepsThenDone) {
  MemoryPair env(3);
  Observations obs = env.Reset();
  ASSERT_EQ(obs.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(obs[i][0] + obs[i][1], 1.0);
    EXPECT_EQ(obs[i][env.bits()[i]], 1.0);
  }
  const std::array<std::size_t, 2> actions{0, 0};
  StepResult first = env.Step(actions);
  EXPECT_FALSE(first.done);
  EXPECT_EQ(first.reward, 0.0);
  EXPECT_EQ(first.next_obs, (Observations{{0.0, 0.0}, {0.0, 0.0}}));
  StepResult second = env.Step(actions);
  EXPECT_TRUE(second.done);
  EXPECT_THROW(env.Step(actions), std::logic_error);
}

// Plays one episode where the final actions are chosen by `policy` from the
// first observations.
template <typename Policy>
double PlayMemory(MemoryPair& env, Policy policy) {
  Observations obs = env.Reset();
  const std::array<std::size_t, 2> first{0, 0};
  env.Step(first);
  const std::array<std::size_t, 2> last = policy(obs);
  return env.Step(last).reward;
}

TEST(MemoryPairTest, RecallPolicyAlwaysScoresOne) {
  MemoryPair env(5);
  for (int e = 0; e < 200; ++e) {
    const double r = PlayMemory(env, [](const Observations& obs) {
      return std::array<std::size_t, 2>{obs[0][1] > 0.5 ? 1u : 0u, obs[1][1] > 0.5 ? 1u : 0u};
    });
    EXPECT_EQ(r, 1.0);
  }
}

TEST(MemoryPairTest, MemorylessPoliciesScoreOneQuarterByEnumeration) {
  // Each fixed final pair matches exactly one of the 4 equiprobable bit pairs.
  for (std::size_t x = 0; x < 2; ++x) {
    for (std::size_t y = 0; y < 2; ++y) {
      double total = 0.0;
      for (std::size_t b0 = 0; b0 < 2; ++b0) {
        for (std::size_t b1 = 0; b1 < 2; ++b1) total += (x == b0 && y == b1) ? 1.0 : 0.0;
      }
      EXPECT_DOUBLE_EQ(total / 4.0, 0.25);
    }
  }
  // The environment's bit distribution is uniform over the 4 pairs.
  MemoryPair env(11);
  std::array<int, 4> counts{};
  const int episodes = 40000;
  double fixed_return = 0.0;
  for (int e = 0; e < episodes; ++e) {
    fixed_return += PlayMemory(env, [](const Observations&) { return std::array<std::size_t, 2>{1, 0}; });
    ++counts[env.bits()[0] * 2 + env.bits()[1]];
  }
  for (int c : counts) EXPECT_NEAR(c / static_cast<double>(episodes), 0.25, 0.01);
  EXPECT_NEAR(fixed_return / episodes, 0.25, 0.01);
}

TEST(EnvTest, SeedReproducesEpisodes) {
  auto a = MakeEnv("memory_pair", 77);
  auto b = MakeEnv("memory_pair", 77);
  auto c = MakeEnv("memory_pair", 78);
  bool differs = false;
  for (int e = 0; e < 50; ++e) {
    Observations oa = a->Reset();
    Observations ob = b->Reset();
    Observations oc = c->Reset();
    EXPECT_EQ(oa, ob);
    differs |= oa != oc;
  }
  EXPECT_TRUE(differs);
}

TEST(EnvTest, CloneContinuesIdentically) {
  auto a = MakeEnv("memory_pair", 4);
  a->Reset();
  auto b = a->Clone();
  for (int e = 0; e < 20; ++e) EXPECT_EQ(a->Reset(), b->Reset());
}

TEST(EnvTest, RegistryKnowsAllEnvironments) {
  for (const char* name : {"matrix3", "matrix21", "memory_pair"}) {
    EXPECT_TRUE(IsKnownEnv(name));
    auto env = MakeEnv(name, 0);
    EXPECT_EQ(env->name(), name);
    EXPECT_EQ(env->n_agents(), 2u);
    EXPECT_DOUBLE_EQ(env->gamma(), 0.99);
  }
  EXPECT_FALSE(IsKnownEnv("smac"));
  EXPECT_THROW(MakeEnv("smac", 0), std::invalid_argument);
  EXPECT_NE(MakeEnv("matrix3", 0)->AsMatrixGame(), nullptr);
  EXPECT_EQ(MakeEnv("memory_pair", 0)->AsMatrixGame(), nullptr);
}

}  // namespace
}  // namespace qfree
