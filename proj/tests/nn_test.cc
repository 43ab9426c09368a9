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

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qfree/nn.h"
#include "test_util.h"

namespace qfree {
namespace {

using testing::CheckGradients;
using testing::RandomTensor;

std::vector<double> Values(Var v) { return {v.value().data().begin(), v.value().data().end()}; }

TEST(ParamSetTest, PathsAreUniqueAndSorted) {
  ParamSet p;
  p.Add("b.w", Tensor({1}));
  p.Add("a.w", Tensor({2}));
  EXPECT_THROW(p.Add("a.w", Tensor({1})), std::invalid_argument);
  EXPECT_EQ(p.paths(), (std::vector<std::string>{"a.w", "b.w"}));
  EXPECT_TRUE(p.at("a.w").requires_grad());
  EXPECT_EQ(p.num_values(), 3u);
  EXPECT_THROW(p.at("missing"), std::out_of_range);
}

TEST(DenseTest, ZeroWeightsGiveBias) {
  ParamSet p;
  p.Add("d.w", Tensor({3, 2}));
  p.Add("d.b", Tensor({1, 2}, std::vector<double>{0.5, -1.5}));
  Graph g;
  Var out = DenseForward(g, p, "d", g.Constant(Tensor::Matrix({{1, 2, 3}, {-4, 5, 6}})));
  EXPECT_EQ(Values(out), (std::vector<double>{0.5, -1.5, 0.5, -1.5}));
}

TEST(DenseTest, IdentityWeightsGiveInput) {
  ParamSet p;
  p.Add("d.w", Tensor::Matrix({{1, 0}, {0, 1}}));
  p.Add("d.b", Tensor({1, 2}));
  Graph g;
  Var out = DenseForward(g, p, "d", g.Constant(Tensor::Matrix({{3, -7}})));
  EXPECT_EQ(Values(out), (std::vector<double>{3, -7}));
  EXPECT_EQ(Values(DenseForward(g, p, "d", g.Constant(Tensor::Matrix({{-3, 7}})), Activation::kRelu)),
            (std::vector<double>{0, 7}));
}

TEST(DenseTest, ShapeMismatchRejected) {
  Rng rng(1);
  ParamSet p;
  DenseLayer("d", 3, 2).Init(p, rng);
  Graph g;
  EXPECT_THROW(DenseForward(g, p, "d", g.Constant(Tensor({1, 4}))), DimensionError);
}

TEST(DenseTest, InitRangeAndDeterminism) {
  Rng a(42), b(42);
  ParamSet pa, pb;
  DenseLayer("d", 16, 8).Init(pa, a);
  DenseLayer("d", 16, 8).Init(pb, b);
  const double bound = 1.0 / std::sqrt(16.0);
  for (double w : pa.at("d.w").data()) {
    EXPECT_LE(std::abs(w), bound);
  }
  for (double x : pa.at("d.b").data()) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(std::vector<double>(pa.at("d.w").data().begin(), pa.at("d.w").data().end()),
            std::vector<double>(pb.at("d.w").data().begin(), pb.at("d.w").data().end()));
}

TEST(DenseTest, GradientMatchesFiniteDifferences) {
  Rng rng(2);
  ParamSet p;
  DenseLayer("d", 5, 3, Activation::kElu).Init(p, rng);
  for (double& x : p.at("d.b").mutable_data()) x = rng.Uniform(-1, 1);
  const Tensor x = RandomTensor({4, 5}, rng);
  for (Activation act : {Activation::kNone, Activation::kElu, Activation::kTanh, Activation::kRelu}) {
    auto check = CheckGradients(p, [&](Graph& g) {
      return Sum(Square(DenseForward(g, p, "d", g.Constant(x), act)));
    });
    EXPECT_TRUE(check.ok()) << check.worst;
  }
}

TEST(GruTest, ZeroParamsKeepZeroState) {
  ParamSet p;
  Rng rng(3);
  GruCell cell("rnn", 4, 6);
  cell.Init(p, rng);
  for (auto& [path, t] : p) {
    for (double& x : t.mutable_data()) x = 0.0;
  }
  Graph g;
  Var h = cell.Step(g, p, g.Constant(Tensor({2, 4})), g.Constant(Tensor({2, 6})));
  for (double x : h.value().data()) EXPECT_EQ(x, 0.0);
}

TEST(GruTest, FiniteForLargeInputs) {
  ParamSet p;
  Rng rng(4);
  GruCell cell("rnn", 3, 5);
  cell.Init(p, rng);
  Graph g;
  Var h = g.Constant(RandomTensor({7, 5}, rng, -10, 10));
  for (int t = 0; t < 5; ++t) h = cell.Step(g, p, g.Constant(RandomTensor({7, 3}, rng, -10, 10)), h);
  EXPECT_TRUE(h.value().AllFinite());
  for (double x : h.value().data()) EXPECT_LE(std::abs(x), 10.0);
}

TEST(GruTest, RejectsMismatchedShapes) {
  ParamSet p;
  Rng rng(4);
  GruCell cell("rnn", 3, 5);
  cell.Init(p, rng);
  Graph g;
  EXPECT_THROW(cell.Step(g, p, g.Constant(Tensor({2, 4})), g.Constant(Tensor({2, 5}))), DimensionError);
  EXPECT_THROW(cell.Step(g, p, g.Constant(Tensor({2, 3})), g.Constant(Tensor({2, 4}))), DimensionError);
}

TEST(GruTest, ThreeStepUnrollMatchesFiniteDifferences) {
  ParamSet p;
  Rng rng(5);
  GruCell cell("rnn", 3, 4);
  cell.Init(p, rng);
  for (auto& [path, t] : p) {
    for (double& x : t.mutable_data()) x = rng.Uniform(-1, 1);
  }
  std::vector<Tensor> xs;
  for (int t = 0; t < 3; ++t) xs.push_back(RandomTensor({2, 3}, rng));
  const Tensor target = RandomTensor({2, 4}, rng);
  auto check = CheckGradients(p, [&](Graph& g) {
    Var h = g.Constant(Tensor({2, 4}));
    for (const Tensor& x : xs) h = cell.Step(g, p, g.Constant(x), h);
    return Sum(Square(Sub(h, g.Constant(target))));
  });
  EXPECT_TRUE(check.ok()) << check.worst;
  EXPECT_GT(check.checked, 50u);
}

TEST(AdamTest, ZeroGradientLeavesParametersUnchanged) {
  ParamSet p;
  p.Add("w", Tensor::Vector({1.0, -2.0}));
  p.at("w").mutable_grad();
  Adam adam;
  adam.Step(p);
  EXPECT_EQ(p.at("w")[0], 1.0);
  EXPECT_EQ(p.at("w")[1], -2.0);
}

TEST(AdamTest, MissingGradientRejected) {
  ParamSet p;
  p.Add("w", Tensor::Vector({1.0}));
  Adam adam;
  EXPECT_THROW(adam.Step(p), std::logic_error);
}

double Quadratic(ParamSet& p) {
  Graph g;
  Var w = g.Param(p.at("w"));
  // f(w) = w0^2 + 3 w1^2, minimum 0 at the origin.
  Var loss = Sum(Mul(Square(w), g.Constant(Tensor::Vector({1.0, 3.0}))));
  g.Backward(loss);
  return loss.value().item();
}

TEST(AdamTest, OneStepDecreasesSquare) {
  ParamSet p;
  p.Add("w", Tensor::Vector({1.0, 0.0}));
  Adam adam;
  p.ZeroGrad();
  const double before = Quadratic(p);
  adam.Step(p);
  p.ZeroGrad();
  EXPECT_LT(Quadratic(p), before);
}

TEST(AdamTest, ConvergesOnTwoParameterQuadratic) {
  ParamSet p;
  p.Add("w", Tensor::Vector({1.0, -1.0}));
  Adam adam(AdamConfig{0.05});
  double loss = 0.0;
  for (int step = 0; step < 200; ++step) {
    p.ZeroGrad();
    loss = Quadratic(p);
    adam.Step(p);
  }
  p.ZeroGrad();
  loss = Quadratic(p);
  EXPECT_LE(loss, 1e-3);
  EXPECT_EQ(adam.steps(), 200);
}

TEST(AdamTest, TinyGradientsStayFinite) {
  ParamSet p;
  p.Add("w", Tensor::Vector({1e-300, -1e-300}));
  Adam adam;
  for (int step = 0; step < 5; ++step) {
    p.ZeroGrad();
    Quadratic(p);
    adam.Step(p);
  }
  EXPECT_TRUE(p.at("w").AllFinite());
}

TEST(ClipTest, RescalesToMaxNorm) {
  ParamSet p;
  p.Add("a", Tensor::Vector({0.0, 0.0}));
  p.Add("b", Tensor::Vector({0.0}));
  p.ZeroGrad();
  p.at("a").mutable_grad()[0] = 3.0;
  p.at("b").mutable_grad()[0] = 4.0;
  EXPECT_DOUBLE_EQ(ClipGradNorm(p, 10.0), 5.0);
  EXPECT_DOUBLE_EQ(p.at("a").grad()[0], 3.0);
  EXPECT_DOUBLE_EQ(ClipGradNorm(p, 1.0), 5.0);
  EXPECT_NEAR(p.at("a").grad()[0], 0.6, 1e-15);
  EXPECT_NEAR(p.at("b").grad()[0], 0.8, 1e-15);
}

ParamSet RandomNet(std::uint64_t seed) {
  Rng rng(seed);
  ParamSet p;
  DenseLayer("l1", 3, 5, Activation::kRelu).Init(p, rng);
  GruCell("rnn", 5, 5).Init(p, rng);
  DenseLayer("l2", 5, 2).Init(p, rng);
  return p;
}

Tensor NetOutput(ParamSet& p, const Tensor& x) {
  Graph g(false);
  Var h = DenseForward(g, p, "l1", g.Constant(x), Activation::kRelu);
  h = GruCell("rnn", 5, 5).Step(g, p, h, g.Constant(Tensor({x.rows(), 5})));
  return DenseForward(g, p, "l2", h).value();
}

TEST(HardCopyTest, CopyIsBitwiseAndIndependent) {
  ParamSet src = RandomNet(1);
  ParamSet dst = RandomNet(2);
  HardCopy(src, dst);
  for (const auto& [path, t] : src) {
    const auto& other = dst.at(path);
    ASSERT_EQ(t.shape(), other.shape());
    for (std::size_t k = 0; k < t.numel(); ++k) EXPECT_EQ(t[k], other[k]) << path;
  }
  Rng rng(3);
  const Tensor x = RandomTensor({4, 3}, rng);
  const Tensor before = NetOutput(dst, x);
  const Tensor src_out = NetOutput(src, x);
  EXPECT_EQ(std::vector<double>(before.data().begin(), before.data().end()),
            std::vector<double>(src_out.data().begin(), src_out.data().end()));
  for (auto& [path, t] : src) {
    for (double& v : t.mutable_data()) v += 0.5;
  }
  const Tensor after = NetOutput(dst, x);
  EXPECT_EQ(std::vector<double>(before.data().begin(), before.data().end()),
            std::vector<double>(after.data().begin(), after.data().end()));
}

TEST(HardCopyTest, StructureMismatchRejected) {
  ParamSet src = RandomNet(1);
  ParamSet dst;
  dst.Add("l1.w", Tensor({3, 5}));
  EXPECT_THROW(HardCopy(src, dst), std::invalid_argument);
  ParamSet reshaped = RandomNet(1);
  reshaped.at("l2.b") = Tensor({1, 3});
  EXPECT_THROW(HardCopy(src, reshaped), std::invalid_argument);
}

TEST(InitTest, SeedDeterminesParameters) {
  ParamSet a = RandomNet(9), b = RandomNet(9), c = RandomNet(10);
  bool differs = false;
  for (const auto& [path, t] : a) {
    for (std::size_t k = 0; k < t.numel(); ++k) {
      EXPECT_EQ(t[k], b.at(path)[k]);
      differs |= t[k] != c.at(path)[k];
    }
  }
  EXPECT_TRUE(differs);
}

TEST(CheckpointTest, RoundTripIsExact) {
  ParamSet p = RandomNet(7);
  std::stringstream first;
  WriteCheckpoint(p, first);
  const std::string bytes = first.str();
  std::stringstream in(bytes);
  ParamSet loaded = ReadCheckpoint(in);
  ASSERT_TRUE(loaded.SameStructure(p));
  for (const auto& [path, t] : p) {
    for (std::size_t k = 0; k < t.numel(); ++k) EXPECT_EQ(t[k], loaded.at(path)[k]);
  }
  std::stringstream second;
  WriteCheckpoint(loaded, second);
  EXPECT_EQ(second.str(), bytes);
}

TEST(CheckpointTest, CorruptInputRejected) {
  std::stringstream bad("not a checkpoint");
  EXPECT_THROW(ReadCheckpoint(bad), std::runtime_error);
  ParamSet p = RandomNet(7);
  std::stringstream out;
  WriteCheckpoint(p, out);
  std::string truncated = out.str().substr(0, out.str().size() - 5);
  std::stringstream in(truncated);
  EXPECT_THROW(ReadCheckpoint(in), std::runtime_error);
}

}  // namespace
}  // namespace qfree
