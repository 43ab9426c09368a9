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

#include "qfree/autodiff.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace qfree {

const char* OpName(OpKind op) {
  switch (op) {
    case OpKind::kConstant: return "constant";
    case OpKind::kInput: return "input";
    case OpKind::kParam: return "param";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScalarMul: return "scalar_mul";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kRelu: return "relu";
    case OpKind::kElu: return "elu";
    case OpKind::kAbs: return "abs";
    case OpKind::kSquare: return "square";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSumAxis: return "sum_axis";
    case OpKind::kMaxAxis: return "max_axis";
    case OpKind::kReshape: return "reshape";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kGather: return "gather";
  }
  return "unknown";
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

// A sum is non-finite iff some term is non-finite (barring overflow of
// already-huge values, which is a blow-up anyway).
void CheckFinite(std::span<const double> values, const char* what) {
  double acc = 0.0;
  for (double v : values) acc += v;
  if (!std::isfinite(acc)) {
    throw NumericalError(std::string("non-finite value produced by ") + what);
  }
}

struct BroadcastPlan {
  enum class Kind { kSame, kScalarA, kScalarB, kGeneral };
  Kind kind = Kind::kSame;
  Shape out;
  std::vector<std::size_t> a_stride;
  std::vector<std::size_t> b_stride;
};

std::vector<std::size_t> ContiguousStrides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t d = shape.size(); d-- > 1;) strides[d - 1] = strides[d] * shape[d];
  return strides;
}

BroadcastPlan PlanBroadcast(const Shape& a, const Shape& b, const char* op) {
  BroadcastPlan plan;
  if (a == b) {
    plan.out = a;
    return plan;
  }
  if (NumElements(b) == 1) {
    plan.kind = BroadcastPlan::Kind::kScalarB;
    plan.out = a;
    return plan;
  }
  if (NumElements(a) == 1) {
    plan.kind = BroadcastPlan::Kind::kScalarA;
    plan.out = b;
    return plan;
  }
  auto fail = [&] {
    throw DimensionError(std::string(op) + ": cannot broadcast " + ShapeString(a) +
                         " with " + ShapeString(b));
  };
  if (a.size() != b.size()) fail();
  plan.kind = BroadcastPlan::Kind::kGeneral;
  plan.out.resize(a.size());
  auto sa = ContiguousStrides(a);
  auto sb = ContiguousStrides(b);
  plan.a_stride.resize(a.size());
  plan.b_stride.resize(a.size());
  for (std::size_t d = 0; d < a.size(); ++d) {
    if (a[d] != b[d] && a[d] != 1 && b[d] != 1) fail();
    plan.out[d] = std::max(a[d], b[d]);
    plan.a_stride[d] = a[d] == 1 ? 0 : sa[d];
    plan.b_stride[d] = b[d] == 1 ? 0 : sb[d];
  }
  return plan;
}

// Calls f(out_index, a_index, b_index) for every output element.
template <class F>
void ForEachBroadcast(const BroadcastPlan& plan, F&& f) {
  const std::size_t n = NumElements(plan.out);
  switch (plan.kind) {
    case BroadcastPlan::Kind::kSame:
      for (std::size_t k = 0; k < n; ++k) f(k, k, k);
      return;
    case BroadcastPlan::Kind::kScalarA:
      for (std::size_t k = 0; k < n; ++k) f(k, std::size_t{0}, k);
      return;
    case BroadcastPlan::Kind::kScalarB:
      for (std::size_t k = 0; k < n; ++k) f(k, k, std::size_t{0});
      return;
    case BroadcastPlan::Kind::kGeneral:
      break;
  }
  const std::size_t rank = plan.out.size();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t k = 0; k < n; ++k) {
    f(k, ia, ib);
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      ia += plan.a_stride[d];
      ib += plan.b_stride[d];
      if (idx[d] < plan.out[d]) break;
      ia -= plan.a_stride[d] * plan.out[d];
      ib -= plan.b_stride[d] * plan.out[d];
      idx[d] = 0;
    }
  }
}

// outer x len x inner decomposition around one axis.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit SplitAt(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw DimensionError(std::string(op) + ": invalid axis " + std::to_string(axis) +
                         " for shape " + ShapeString(shape));
  }
  AxisSplit s;
  for (std::size_t d = 0; d < axis; ++d) s.outer *= shape[d];
  s.len = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) s.inner *= shape[d];
  return s;
}

Graph* SameGraph(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument(std::string(op) + ": invalid operand");
  if (a.graph() != b.graph()) {
    throw std::invalid_argument(std::string(op) + ": operands live on different graphs");
  }
  return a.graph();
}

Graph* GraphOf(Var a, const char* op) {
  if (!a.valid()) throw std::invalid_argument(std::string(op) + ": invalid operand");
  return a.graph();
}

}  // namespace

// Grants the op implementations access to Graph::Push.
class Ops {
 public:
  static Var Push(Graph* g, OpKind op, std::vector<int> inputs, Tensor value,
                  double scalar = 0.0, std::vector<std::size_t> aux = {}) {
    return g->Push(op, std::move(inputs), std::move(value), scalar, std::move(aux));
  }
};

// ---------------------------------------------------------------- Var/Graph

const Tensor& Var::value() const {
  if (graph_ == nullptr) throw std::logic_error("value() of an unbound Var");
  return graph_->value(*this);
}

Graph::Graph(bool record_gradients) : record_gradients_(record_gradients) {
  nodes_.reserve(256);
}

const Graph::Node& Graph::node(Var v) const {
  if (v.graph_ != this || v.id_ < 0 || static_cast<std::size_t>(v.id_) >= nodes_.size()) {
    throw std::invalid_argument("Var does not belong to this graph");
  }
  return nodes_[static_cast<std::size_t>(v.id_)];
}

Graph::Node& Graph::node(Var v) {
  return const_cast<Node&>(static_cast<const Graph*>(this)->node(v));
}

const Tensor& Graph::value_at(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.external != nullptr ? *n.external : n.value;
}

const Tensor& Graph::value(Var v) const {
  node(v);
  return value_at(v.id_);
}

Tensor& Graph::leaf(Var v) {
  Node& n = node(v);
  if (n.op == OpKind::kParam) return *n.external;
  if (n.op == OpKind::kInput || n.op == OpKind::kConstant) return n.value;
  throw std::invalid_argument("leaf() called on a non-leaf node");
}

std::span<const double> Graph::grad(Var v) const { return node(v).grad; }

Var Graph::Push(OpKind op, std::vector<int> inputs, Tensor value, double scalar,
                std::vector<std::size_t> aux) {
  CheckFinite(value.data(), OpName(op));
  Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  n.scalar = scalar;
  n.aux = std::move(aux);
  if (record_gradients_) {
    for (int in : n.inputs) {
      if (nodes_[static_cast<std::size_t>(in)].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::Constant(Tensor value) {
  value.set_requires_grad(false);
  return Push(OpKind::kConstant, {}, std::move(value));
}

Var Graph::Input(Tensor value) {
  bool trainable = value.requires_grad();
  Var v = Push(OpKind::kInput, {}, std::move(value));
  nodes_.back().needs_grad = record_gradients_ && trainable;
  return v;
}

Var Graph::Param(Tensor& tensor) {
  if (auto it = bound_params_.find(&tensor); it != bound_params_.end()) {
    return Var(this, it->second);
  }
  CheckFinite(tensor.data(), "param");
  Node n;
  n.op = OpKind::kParam;
  n.external = &tensor;
  n.needs_grad = record_gradients_ && tensor.requires_grad();
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size() - 1);
  bound_params_.emplace(&tensor, id);
  return Var(this, id);
}

void Graph::Backward(Var loss) {
  if (!record_gradients_) throw std::logic_error("Backward() on a graph without gradient recording");
  const Node& root = node(loss);
  if (value_at(loss.id_).numel() != 1) {
    throw DimensionError("Backward() needs a scalar loss, got " +
                         ShapeString(value_at(loss.id_).shape()));
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    if (n.op == OpKind::kParam && n.needs_grad) n.external->mutable_grad();
    if (n.op == OpKind::kInput && n.needs_grad) n.value.mutable_grad();
  }
  if (!root.needs_grad) return;
  for (int id = 0; id <= loss.id_; ++id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.needs_grad) n.grad.assign(value_at(id).numel(), 0.0);
  }
  nodes_[static_cast<std::size_t>(loss.id_)].grad[0] = 1.0;
  // Nodes the loss does not depend on keep zero gradient and are skipped.
  std::vector<char> reached(static_cast<std::size_t>(loss.id_) + 1, 0);
  reached[static_cast<std::size_t>(loss.id_)] = 1;
  for (int id = loss.id_; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || !reached[static_cast<std::size_t>(id)]) continue;
    for (int in : n.inputs) reached[static_cast<std::size_t>(in)] = 1;
    BackwardNode(id);
  }
  for (const Node& n : nodes_) {
    if (n.op == OpKind::kParam && n.needs_grad) CheckFinite(n.external->grad(), "backward");
    if (n.op == OpKind::kInput && n.needs_grad) CheckFinite(n.value.grad(), "backward");
  }
}

void Graph::BackwardNode(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  const std::vector<double>& g = n.grad;
  auto input_grad = [&](std::size_t k) -> std::vector<double>* {
    Node& in = nodes_[static_cast<std::size_t>(n.inputs[k])];
    return in.needs_grad ? &in.grad : nullptr;
  };
  auto input_value = [&](std::size_t k) -> const Tensor& { return value_at(n.inputs[k]); };
  const Tensor& out = value_at(id);

  switch (n.op) {
    case OpKind::kConstant:
      return;
    case OpKind::kInput: {
      auto dst = n.value.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
      return;
    }
    case OpKind::kParam: {
      auto dst = n.external->mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
      return;
    }
    case OpKind::kMatMul: {
      const Tensor& a = input_value(0);
      const Tensor& b = input_value(1);
      const auto m = static_cast<Eigen::Index>(a.shape()[0]);
      const auto k = static_cast<Eigen::Index>(a.shape()[1]);
      const auto cols = static_cast<Eigen::Index>(b.shape()[1]);
      ConstMap gm(g.data(), m, cols);
      if (auto* ga = input_grad(0)) {
        MutMap(ga->data(), m, k).noalias() += gm * ConstMap(b.data().data(), k, cols).transpose();
      }
      if (auto* gb = input_grad(1)) {
        MutMap(gb->data(), k, cols).noalias() += ConstMap(a.data().data(), m, k).transpose() * gm;
      }
      return;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul: {
      const Tensor& a = input_value(0);
      const Tensor& b = input_value(1);
      BroadcastPlan plan = PlanBroadcast(a.shape(), b.shape(), OpName(n.op));
      auto* ga = input_grad(0);
      auto* gb = input_grad(1);
      const double sign_b = n.op == OpKind::kSub ? -1.0 : 1.0;
      const bool mul = n.op == OpKind::kMul;
      ForEachBroadcast(plan, [&](std::size_t k, std::size_t ia, std::size_t ib) {
        if (ga) (*ga)[ia] += mul ? g[k] * b[ib] : g[k];
        if (gb) (*gb)[ib] += mul ? g[k] * a[ia] : sign_b * g[k];
      });
      return;
    }
    default:
      break;
  }

  auto* ga = input_grad(0);
  if (ga == nullptr) return;
  const Tensor& a = input_value(0);
  std::vector<double>& da = *ga;
  switch (n.op) {
    case OpKind::kScalarMul:
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += n.scalar * g[i];
      break;
    case OpKind::kAddScalar:
    case OpKind::kReshape:
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      break;
    case OpKind::kRelu:
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += a[i] > 0.0 ? g[i] : 0.0;
      break;
    case OpKind::kElu:
      // d/dx (e^x - 1) = out + 1 on the negative branch.
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += a[i] > 0.0 ? g[i] : g[i] * (out[i] + 1.0);
      break;
    case OpKind::kAbs:
      for (std::size_t i = 0; i < g.size(); ++i) {
        da[i] += a[i] > 0.0 ? g[i] : (a[i] < 0.0 ? -g[i] : 0.0);
      }
      break;
    case OpKind::kSquare:
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += 2.0 * a[i] * g[i];
      break;
    case OpKind::kTanh:
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (1.0 - out[i] * out[i]);
      break;
    case OpKind::kSigmoid:
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * out[i] * (1.0 - out[i]);
      break;
    case OpKind::kSum:
      for (double& d : da) d += g[0];
      break;
    case OpKind::kMean: {
      const double scale = g[0] / static_cast<double>(da.size());
      for (double& d : da) d += scale;
      break;
    }
    case OpKind::kSumAxis: {
      const std::size_t outer = n.aux[0], len = n.aux[1], inner = n.aux[2];
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < len; ++j) {
          for (std::size_t i = 0; i < inner; ++i) da[(o * len + j) * inner + i] += g[o * inner + i];
        }
      }
      break;
    }
    case OpKind::kMaxAxis: {
      // aux holds the flat source index of every output element.
      for (std::size_t k = 0; k < g.size(); ++k) da[n.aux[k]] += g[k];
      break;
    }
    case OpKind::kConcat: {
      // aux: axis split (outer, inner) followed by per-part lengths.
      const std::size_t outer = n.aux[0], inner = n.aux[1];
      const std::size_t parts = n.inputs.size();
      std::size_t total = 0;
      for (std::size_t p = 0; p < parts; ++p) total += n.aux[2 + p];
      std::size_t offset = 0;
      for (std::size_t p = 0; p < parts; ++p) {
        const std::size_t len = n.aux[2 + p];
        if (auto* gp = input_grad(p)) {
          for (std::size_t o = 0; o < outer; ++o) {
            const double* src = g.data() + (o * total + offset) * inner;
            double* dst = gp->data() + o * len * inner;
            for (std::size_t i = 0; i < len * inner; ++i) dst[i] += src[i];
          }
        }
        offset += len;
      }
      break;
    }
    case OpKind::kSlice: {
      const std::size_t outer = n.aux[0], len = n.aux[1], inner = n.aux[2];
      const std::size_t begin = n.aux[3], end = n.aux[4];
      const std::size_t width = end - begin;
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < width * inner; ++i) {
          da[(o * len + begin) * inner + i] += g[o * width * inner + i];
        }
      }
      break;
    }
    case OpKind::kGather: {
      const std::size_t cols = a.shape()[1];
      for (std::size_t r = 0; r < g.size(); ++r) da[r * cols + n.aux[r]] += g[r];
      break;
    }
    default:
      throw std::logic_error(std::string("no backward rule for ") + OpName(n.op));
  }
}

// ---------------------------------------------------------------------- ops

Var MatMul(Var a, Var b) {
  Graph* g = SameGraph(a, b, "matmul");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rank() != 2 || y.rank() != 2 || x.shape()[1] != y.shape()[0]) {
    throw DimensionError("matmul: incompatible shapes " + ShapeString(x.shape()) + " and " +
                         ShapeString(y.shape()));
  }
  const auto m = static_cast<Eigen::Index>(x.shape()[0]);
  const auto k = static_cast<Eigen::Index>(x.shape()[1]);
  const auto n = static_cast<Eigen::Index>(y.shape()[1]);
  Tensor out({x.shape()[0], y.shape()[1]});
  MutMap(out.mutable_data().data(), m, n).noalias() =
      ConstMap(x.data().data(), m, k) * ConstMap(y.data().data(), k, n);
  return Ops::Push(g, OpKind::kMatMul, {a.id(), b.id()}, std::move(out));
}

namespace {

template <class F>
Var BinaryOp(Var a, Var b, OpKind op, F f) {
  Graph* g = SameGraph(a, b, OpName(op));
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  BroadcastPlan plan = PlanBroadcast(x.shape(), y.shape(), OpName(op));
  Tensor out(plan.out);
  auto dst = out.mutable_data();
  ForEachBroadcast(plan, [&](std::size_t k, std::size_t ia, std::size_t ib) { dst[k] = f(x[ia], y[ib]); });
  return Ops::Push(g, op, {a.id(), b.id()}, std::move(out));
}

template <class F>
Var UnaryOp(Var a, OpKind op, F f, double scalar = 0.0) {
  Graph* g = GraphOf(a, OpName(op));
  const Tensor& x = a.value();
  Tensor out(x.shape());
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < x.numel(); ++i) dst[i] = f(x[i]);
  return Ops::Push(g, op, {a.id()}, std::move(out), scalar);
}

}  // namespace

Var Add(Var a, Var b) {
  return BinaryOp(a, b, OpKind::kAdd, [](double x, double y) { return x + y; });
}
Var Sub(Var a, Var b) {
  return BinaryOp(a, b, OpKind::kSub, [](double x, double y) { return x - y; });
}
Var Mul(Var a, Var b) {
  return BinaryOp(a, b, OpKind::kMul, [](double x, double y) { return x * y; });
}

Var ScalarMul(Var a, double s) {
  return UnaryOp(a, OpKind::kScalarMul, [s](double x) { return s * x; }, s);
}
Var AddScalar(Var a, double s) {
  return UnaryOp(a, OpKind::kAddScalar, [s](double x) { return x + s; }, s);
}
Var Neg(Var a) { return ScalarMul(a, -1.0); }
Var Relu(Var a) {
  return UnaryOp(a, OpKind::kRelu, [](double x) { return x > 0.0 ? x : 0.0; });
}
Var Elu(Var a) {
  return UnaryOp(a, OpKind::kElu, [](double x) { return x > 0.0 ? x : std::expm1(x); });
}
Var Abs(Var a) { return UnaryOp(a, OpKind::kAbs, [](double x) { return std::abs(x); }); }
Var Square(Var a) { return UnaryOp(a, OpKind::kSquare, [](double x) { return x * x; }); }
Var Tanh(Var a) { return UnaryOp(a, OpKind::kTanh, [](double x) { return std::tanh(x); }); }
Var Sigmoid(Var a) {
  return UnaryOp(a, OpKind::kSigmoid, [](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}

Var Sum(Var a) {
  Graph* g = GraphOf(a, "sum");
  const Tensor& x = a.value();
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return Ops::Push(g, OpKind::kSum, {a.id()}, Tensor::Scalar(acc));
}

Var Mean(Var a) {
  Graph* g = GraphOf(a, "mean");
  const Tensor& x = a.value();
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return Ops::Push(g, OpKind::kMean, {a.id()},
                   Tensor::Scalar(acc / static_cast<double>(x.numel())));
}

Var SumAxis(Var a, std::size_t axis) {
  Graph* g = GraphOf(a, "sum_axis");
  const Tensor& x = a.value();
  AxisSplit s = SplitAt(x.shape(), axis, "sum_axis");
  Shape shape = x.shape();
  shape[axis] = 1;
  Tensor out(shape);
  auto dst = out.mutable_data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < s.len; ++j) {
      for (std::size_t i = 0; i < s.inner; ++i) dst[o * s.inner + i] += x[(o * s.len + j) * s.inner + i];
    }
  }
  return Ops::Push(g, OpKind::kSumAxis, {a.id()}, std::move(out), 0.0, {s.outer, s.len, s.inner});
}

Var MeanAxis(Var a, std::size_t axis) {
  const std::size_t len = SplitAt(a.shape(), axis, "mean_axis").len;
  return ScalarMul(SumAxis(a, axis), 1.0 / static_cast<double>(len));
}

Var MaxAxis(Var a, std::size_t axis) {
  Graph* g = GraphOf(a, "max_axis");
  const Tensor& x = a.value();
  AxisSplit s = SplitAt(x.shape(), axis, "max_axis");
  Shape shape = x.shape();
  shape[axis] = 1;
  Tensor out(shape);
  std::vector<std::size_t> source(s.outer * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      std::size_t best = o * s.len * s.inner + i;
      for (std::size_t j = 1; j < s.len; ++j) {
        const std::size_t idx = (o * s.len + j) * s.inner + i;
        if (x[idx] > x[best]) best = idx;
      }
      out[o * s.inner + i] = x[best];
      source[o * s.inner + i] = best;
    }
  }
  return Ops::Push(g, OpKind::kMaxAxis, {a.id()}, std::move(out), 0.0, std::move(source));
}

Var Reshape(Var a, Shape shape) {
  Graph* g = GraphOf(a, "reshape");
  const Tensor& x = a.value();
  if (NumElements(shape) != x.numel()) {
    throw DimensionError("reshape: " + ShapeString(x.shape()) + " to " + ShapeString(shape));
  }
  std::vector<double> data(x.data().begin(), x.data().end());
  return Ops::Push(g, OpKind::kReshape, {a.id()}, Tensor(std::move(shape), std::move(data)));
}

Var Concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no operands");
  Graph* g = GraphOf(parts[0], "concat");
  const Shape& first = parts[0].shape();
  AxisSplit s0 = SplitAt(first, axis, "concat");
  std::vector<std::size_t> aux = {s0.outer, s0.inner};
  std::vector<int> inputs;
  std::size_t total = 0;
  for (const Var& p : parts) {
    SameGraph(parts[0], p, "concat");
    const Shape& sh = p.shape();
    bool ok = sh.size() == first.size();
    for (std::size_t d = 0; ok && d < sh.size(); ++d) ok = d == axis || sh[d] == first[d];
    if (!ok) {
      throw DimensionError("concat: " + ShapeString(first) + " and " + ShapeString(sh) +
                           " differ off axis " + std::to_string(axis));
    }
    aux.push_back(sh[axis]);
    inputs.push_back(p.id());
    total += sh[axis];
  }
  Shape shape = first;
  shape[axis] = total;
  Tensor out(shape);
  auto dst = out.mutable_data();
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& x = p.value();
    const std::size_t len = x.shape()[axis];
    for (std::size_t o = 0; o < s0.outer; ++o) {
      std::copy_n(x.data().data() + o * len * s0.inner, len * s0.inner,
                  dst.data() + (o * total + offset) * s0.inner);
    }
    offset += len;
  }
  return Ops::Push(g, OpKind::kConcat, std::move(inputs), std::move(out), 0.0, std::move(aux));
}

Var Slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  Graph* g = GraphOf(a, "slice");
  const Tensor& x = a.value();
  AxisSplit s = SplitAt(x.shape(), axis, "slice");
  if (begin >= end || end > s.len) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of bounds for " + ShapeString(x.shape()));
  }
  Shape shape = x.shape();
  shape[axis] = end - begin;
  Tensor out(shape);
  auto dst = out.mutable_data();
  const std::size_t width = end - begin;
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(x.data().data() + (o * s.len + begin) * s.inner, width * s.inner,
                dst.data() + o * width * s.inner);
  }
  return Ops::Push(g, OpKind::kSlice, {a.id()}, std::move(out), 0.0,
                   {s.outer, s.len, s.inner, begin, end});
}

Var Gather(Var a, std::span<const std::size_t> indices) {
  Graph* g = GraphOf(a, "gather");
  const Tensor& x = a.value();
  if (x.rank() != 2 || indices.size() != x.shape()[0]) {
    throw DimensionError("gather: " + std::to_string(indices.size()) + " indices for " +
                         ShapeString(x.shape()));
  }
  Tensor out({x.shape()[0], 1});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= x.shape()[1]) throw DimensionError("gather: index out of range");
    out[r] = x.at(r, indices[r]);
  }
  return Ops::Push(g, OpKind::kGather, {a.id()}, std::move(out), 0.0,
                   std::vector<std::size_t>(indices.begin(), indices.end()));
}

Var Elementwise(ElementwiseOp op, Var a, Var b, double scalar) {
  switch (op) {
    case ElementwiseOp::kAdd: return Add(a, b);
    case ElementwiseOp::kSub: return Sub(a, b);
    case ElementwiseOp::kMul: return Mul(a, b);
    case ElementwiseOp::kRelu: return Relu(a);
    case ElementwiseOp::kElu: return Elu(a);
    case ElementwiseOp::kAbs: return Abs(a);
    case ElementwiseOp::kSquare: return Square(a);
    case ElementwiseOp::kScalarMul: return ScalarMul(a, scalar);
  }
  throw std::invalid_argument("unknown elementwise op");
}

Var Reduce(ReduceOp op, Var a, std::size_t axis) {
  switch (op) {
    case ReduceOp::kSum: return Sum(a);
    case ReduceOp::kMean: return Mean(a);
    case ReduceOp::kMaxOverAxis: return MaxAxis(a, axis);
  }
  throw std::invalid_argument("unknown reduce op");
}

}  // namespace qfree
