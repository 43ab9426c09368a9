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

// Define-by-run reverse-mode differentiation.
//
// A Graph is an append-only tape. Every op appends one node whose inputs are
// earlier nodes, so insertion order is a topological order and Backward()
// walks the tape in exact reverse. Graphs are rebuilt for every forward pass
// and are not thread-safe; use one Graph per worker.

#ifndef QFREE_AUTODIFF_H_
#define QFREE_AUTODIFF_H_

#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

#include "qfree/tensor.h"

namespace qfree {

class Graph;

enum class OpKind {
  kConstant,
  kInput,
  kParam,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kScalarMul,
  kAddScalar,
  kRelu,
  kElu,
  kAbs,
  kSquare,
  kTanh,
  kSigmoid,
  kSum,
  kMean,
  kSumAxis,
  kMaxAxis,
  kReshape,
  kConcat,
  kSlice,
  kGather,
};

const char* OpName(OpKind op);

// Lightweight handle to a node of a Graph.
class Var {
 public:
  Var() = default;

  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  // A graph built with record_gradients=false never allocates gradient
  // buffers; Backward() on it is an error. Used for target networks.
  explicit Graph(bool record_gradients = true);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf that never receives gradient.
  Var Constant(Tensor value);
  // Graph-owned leaf. Receives gradient when value.requires_grad() is set;
  // read it back through leaf().
  Var Input(Tensor value);
  // Leaf bound to an external tensor (a model parameter). Gradients are
  // accumulated into tensor.mutable_grad(). Binding the same tensor twice
  // returns the same node.
  Var Param(Tensor& tensor);

  const Tensor& value(Var v) const;
  Tensor& leaf(Var v);
  // Gradient of the last Backward() loss w.r.t. this node. Empty when the
  // node does not depend on any trainable leaf.
  std::span<const double> grad(Var v) const;

  // Populates gradients of every trainable leaf reachable from `loss`.
  // Leaf gradients accumulate across calls; intermediate ones are reset.
  void Backward(Var loss);

  bool records_gradients() const { return record_gradients_; }
  std::size_t size() const { return nodes_.size(); }
  OpKind op(Var v) const { return node(v).op; }
  const std::vector<int>& inputs(Var v) const { return node(v).inputs; }

 private:
  friend class Ops;

  struct Node {
    OpKind op = OpKind::kConstant;
    std::vector<int> inputs;
    Tensor value;
    Tensor* external = nullptr;
    bool needs_grad = false;
    std::vector<double> grad;
    double scalar = 0.0;
    std::vector<std::size_t> aux;
  };

  const Node& node(Var v) const;
  Node& node(Var v);
  const Tensor& value_at(int id) const;
  Var Push(OpKind op, std::vector<int> inputs, Tensor value, double scalar = 0.0,
           std::vector<std::size_t> aux = {});
  void BackwardNode(int id);

  bool record_gradients_;
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, int> bound_params_;
};

// ---- Ops. Both operands of a binary op must live on the same graph. ----

// [m x k] * [k x n] -> [m x n].
Var MatMul(Var a, Var b);

// Binary pointwise ops broadcast numpy-style: equal shapes, a single-element
// operand, or equal-rank shapes whose mismatched dimensions are 1.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);

Var ScalarMul(Var a, double s);
Var AddScalar(Var a, double s);
Var Neg(Var a);
Var Relu(Var a);
// Exponential linear unit with alpha = 1.
Var Elu(Var a);
Var Abs(Var a);
Var Square(Var a);
Var Tanh(Var a);
Var Sigmoid(Var a);

// Full reductions to shape {1}.
Var Sum(Var a);
Var Mean(Var a);
// Axis reductions keep the reduced dimension with size 1.
Var SumAxis(Var a, std::size_t axis);
Var MeanAxis(Var a, std::size_t axis);
// Routes gradient to the first maximizing element along the axis.
Var MaxAxis(Var a, std::size_t axis);

Var Reshape(Var a, Shape shape);
Var Concat(std::span<const Var> parts, std::size_t axis);
// Elements [begin, end) along `axis`.
Var Slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
// Rank-2 gather: out[r, 0] = a[r, indices[r]].
Var Gather(Var a, std::span<const std::size_t> indices);

// Named entry points matching the classic op families.
enum class ElementwiseOp { kAdd, kSub, kMul, kRelu, kElu, kAbs, kSquare, kScalarMul };
Var Elementwise(ElementwiseOp op, Var a, Var b = {}, double scalar = 0.0);
enum class ReduceOp { kSum, kMean, kMaxOverAxis };
Var Reduce(ReduceOp op, Var a, std::size_t axis = 0);

}  // namespace qfree

#endif  // QFREE_AUTODIFF_H_
