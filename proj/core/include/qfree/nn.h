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

#ifndef QFREE_NN_H_
#define QFREE_NN_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qfree/autodiff.h"
#include "qfree/random.h"
#include "qfree/tensor.h"

namespace qfree {

// Trainable tensors keyed by dotted path ("agent.rnn.hidden_update.w").
// Iteration is lexicographic by path.
class ParamSet {
 public:
  using Map = std::map<std::string, Tensor>;

  // Registers a new trainable tensor. Throws on a duplicate path.
  Tensor& Add(const std::string& path, Tensor value);

  Tensor& at(const std::string& path);
  const Tensor& at(const std::string& path) const;
  bool contains(const std::string& path) const { return tensors_.count(path) > 0; }

  std::vector<std::string> paths() const;
  std::size_t size() const { return tensors_.size(); }
  std::size_t num_values() const;

  void ZeroGrad();
  bool SameStructure(const ParamSet& other) const;

  Map::iterator begin() { return tensors_.begin(); }
  Map::iterator end() { return tensors_.end(); }
  Map::const_iterator begin() const { return tensors_.begin(); }
  Map::const_iterator end() const { return tensors_.end(); }

 private:
  Map tensors_;
};

enum class Activation { kNone, kRelu, kElu, kTanh };

Var Activate(Var x, Activation act);

// Affine layer x * W + b with W: [in x out] and b: [1 x out].
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::string prefix, std::size_t in, std::size_t out,
             Activation act = Activation::kNone);

  // Weights uniform in +-1/sqrt(in), zero bias.
  void Init(ParamSet& params, Rng& rng) const;
  Var Forward(Graph& g, ParamSet& params, Var x) const;

  const std::string& prefix() const { return prefix_; }
  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }

 private:
  std::string prefix_;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Activation act_ = Activation::kNone;
};

// Free-function form over a ParamSet subtree rooted at `prefix`.
Var DenseForward(Graph& g, ParamSet& params, const std::string& prefix, Var x,
                 Activation act = Activation::kNone);

// Gated recurrent unit:
//   r  = sigmoid(x Wxr + bxr + h Whr + bhr)
//   u  = sigmoid(x Wxu + bxu + h Whu + bhu)
//   c  = tanh(x Wxc + bxc + r * (h Whc + bhc))
//   h' = (1 - u) * c + u * h
class GruCell {
 public:
  GruCell() = default;
  GruCell(std::string prefix, std::size_t input, std::size_t hidden);

  void Init(ParamSet& params, Rng& rng) const;
  Var Step(Graph& g, ParamSet& params, Var x, Var h) const;

  std::size_t hidden() const { return hidden_; }

 private:
  std::string prefix_;
  std::size_t input_ = 0;
  std::size_t hidden_ = 0;
  DenseLayer input_reset_, input_update_, input_candidate_;
  DenseLayer hidden_reset_, hidden_update_, hidden_candidate_;
};

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive moment estimation. Moment buffers persist across Step() calls
// and are keyed by parameter path.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Throws std::logic_error if any parameter lacks a gradient.
  void Step(ParamSet& params);
  std::int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
  };
  AdamConfig config_;
  std::int64_t steps_ = 0;
  std::map<std::string, Moments> moments_;
};

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double ClipGradNorm(ParamSet& params, double max_norm);

// Copies parameter values; dst must have identical paths and shapes.
void HardCopy(const ParamSet& src, ParamSet& dst);

// Binary container of (path, shape, values) triples, little-endian:
//   "QFCKPT01" | u64 count | { u32 len | path | u32 rank | u64 dims[rank] |
//   f64 values[prod(dims)] } * count
void WriteCheckpoint(const ParamSet& params, std::ostream& out);
void WriteCheckpoint(const ParamSet& params, const std::string& path);
ParamSet ReadCheckpoint(std::istream& in);
ParamSet ReadCheckpoint(const std::string& path);

}  // namespace qfree

#endif  // QFREE_NN_H_
