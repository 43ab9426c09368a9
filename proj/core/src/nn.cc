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

#include "qfree/nn.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace qfree {

// ----------------------------------------------------------------- ParamSet

Tensor& ParamSet::Add(const std::string& path, Tensor value) {
  value.set_requires_grad(true);
  auto [it, inserted] = tensors_.emplace(path, std::move(value));
  if (!inserted) throw std::invalid_argument("duplicate parameter path: " + path);
  return it->second;
}

Tensor& ParamSet::at(const std::string& path) {
  auto it = tensors_.find(path);
  if (it == tensors_.end()) throw std::out_of_range("unknown parameter: " + path);
  return it->second;
}

const Tensor& ParamSet::at(const std::string& path) const {
  auto it = tensors_.find(path);
  if (it == tensors_.end()) throw std::out_of_range("unknown parameter: " + path);
  return it->second;
}

std::vector<std::string> ParamSet::paths() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [path, t] : tensors_) out.push_back(path);
  return out;
}

std::size_t ParamSet::num_values() const {
  std::size_t n = 0;
  for (const auto& [path, t] : tensors_) n += t.numel();
  return n;
}

void ParamSet::ZeroGrad() {
  for (auto& [path, t] : tensors_) t.ZeroGrad();
}

bool ParamSet::SameStructure(const ParamSet& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  auto it = other.tensors_.begin();
  for (const auto& [path, t] : tensors_) {
    if (it->first != path || it->second.shape() != t.shape()) return false;
    ++it;
  }
  return true;
}

// ------------------------------------------------------------------- layers

Var Activate(Var x, Activation act) {
  switch (act) {
    case Activation::kNone: return x;
    case Activation::kRelu: return Relu(x);
    case Activation::kElu: return Elu(x);
    case Activation::kTanh: return Tanh(x);
  }
  return x;
}

DenseLayer::DenseLayer(std::string prefix, std::size_t in, std::size_t out, Activation act)
    : prefix_(std::move(prefix)), in_(in), out_(out), act_(act) {}

void DenseLayer::Init(ParamSet& params, Rng& rng) const {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  Tensor w({in_, out_});
  for (double& v : w.mutable_data()) v = rng.Uniform(-bound, bound);
  params.Add(prefix_ + ".w", std::move(w));
  params.Add(prefix_ + ".b", Tensor({1, out_}));
}

Var DenseLayer::Forward(Graph& g, ParamSet& params, Var x) const {
  return DenseForward(g, params, prefix_, x, act_);
}

Var DenseForward(Graph& g, ParamSet& params, const std::string& prefix, Var x,
                 Activation act) {
  Var w = g.Param(params.at(prefix + ".w"));
  Var b = g.Param(params.at(prefix + ".b"));
  if (x.shape().size() != 2 || x.shape()[1] != w.shape()[0]) {
    throw DimensionError("dense " + prefix + ": input " + ShapeString(x.shape()) +
                         " does not match weight " + ShapeString(w.shape()));
  }
  return Activate(Add(MatMul(x, w), b), act);
}

GruCell::GruCell(std::string prefix, std::size_t input, std::size_t hidden)
    : prefix_(std::move(prefix)),
      input_(input),
      hidden_(hidden),
      input_reset_(prefix_ + ".input_reset", input, hidden),
      input_update_(prefix_ + ".input_update", input, hidden),
      input_candidate_(prefix_ + ".input_candidate", input, hidden),
      hidden_reset_(prefix_ + ".hidden_reset", hidden, hidden),
      hidden_update_(prefix_ + ".hidden_update", hidden, hidden),
      hidden_candidate_(prefix_ + ".hidden_candidate", hidden, hidden) {}

void GruCell::Init(ParamSet& params, Rng& rng) const {
  for (const DenseLayer* layer : {&input_reset_, &input_update_, &input_candidate_,
                                  &hidden_reset_, &hidden_update_, &hidden_candidate_}) {
    layer->Init(params, rng);
  }
}

Var GruCell::Step(Graph& g, ParamSet& params, Var x, Var h) const {
  if (h.shape().size() != 2 || h.shape()[1] != hidden_ || h.shape()[0] != x.shape()[0]) {
    throw DimensionError("gru " + prefix_ + ": hidden state " + ShapeString(h.shape()) +
                         " does not match input " + ShapeString(x.shape()));
  }
  Var reset = Sigmoid(Add(input_reset_.Forward(g, params, x), hidden_reset_.Forward(g, params, h)));
  Var update =
      Sigmoid(Add(input_update_.Forward(g, params, x), hidden_update_.Forward(g, params, h)));
  Var candidate = Tanh(Add(input_candidate_.Forward(g, params, x),
                           Mul(reset, hidden_candidate_.Forward(g, params, h))));
  // (1 - u) * c + u * h == c + u * (h - c)
  return Add(candidate, Mul(update, Sub(h, candidate)));
}

// -------------------------------------------------------------------- Adam

void Adam::Step(ParamSet& params) {
  for (const auto& [path, t] : params) {
    if (!t.has_grad()) throw std::logic_error("adam: parameter has no gradient: " + path);
  }
  ++steps_;
  const double correction1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (auto& [path, t] : params) {
    Moments& m = moments_[path];
    if (m.first.size() != t.numel()) {
      m.first.assign(t.numel(), 0.0);
      m.second.assign(t.numel(), 0.0);
    }
    auto grad = t.grad();
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      m.first[i] = config_.beta1 * m.first[i] + (1.0 - config_.beta1) * grad[i];
      m.second[i] = config_.beta2 * m.second[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
      const double m_hat = m.first[i] / correction1;
      const double v_hat = m.second[i] / correction2;
      data[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

double ClipGradNorm(ParamSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [path, t] : params) {
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& [path, t] : params) {
      if (!t.has_grad()) continue;
      for (double& g : t.mutable_grad()) g *= scale;
    }
  }
  return norm;
}

void HardCopy(const ParamSet& src, ParamSet& dst) {
  if (!src.SameStructure(dst)) {
    throw std::invalid_argument("hard copy: parameter sets differ in paths or shapes");
  }
  auto it = dst.begin();
  for (const auto& [path, t] : src) {
    std::copy(t.data().begin(), t.data().end(), it->second.mutable_data().begin());
    ++it;
  }
}

// -------------------------------------------------------------- checkpoint

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

constexpr char kMagic[8] = {'Q', 'F', 'C', 'K', 'P', 'T', '0', '1'};

template <class T>
void Put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T Get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated input");
  return value;
}

}  // namespace

void WriteCheckpoint(const ParamSet& params, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  Put<std::uint64_t>(out, params.size());
  for (const auto& [path, t] : params) {
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(path.size()));
    out.write(path.data(), static_cast<std::streamsize>(path.size()));
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) Put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.numel() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

void WriteCheckpoint(const ParamSet& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  WriteCheckpoint(params, out);
}

ParamSet ReadCheckpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  ParamSet params;
  const auto count = Get<std::uint64_t>(in);
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = Get<std::uint32_t>(in);
    std::string path(len, '\0');
    in.read(path.data(), len);
    const auto rank = Get<std::uint32_t>(in);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(Get<std::uint64_t>(in));
    std::vector<double> values(NumElements(shape));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated values for " + path);
    params.Add(path, Tensor(std::move(shape), std::move(values)));
  }
  return params;
}

ParamSet ReadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  return ReadCheckpoint(in);
}

}  // namespace qfree
