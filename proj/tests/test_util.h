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

// Shared test oracles: central finite differences and brute-force table
// enumeration, written independently of the library code they check.

#ifndef QFREE_TESTS_TEST_UTIL_H_
#define QFREE_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "qfree/autodiff.h"
#include "qfree/nn.h"
#include "qfree/random.h"
#include "qfree/tensor.h"

namespace qfree::testing {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdRelTol = 1e-4;
inline constexpr double kFdAbsFloor = 1e-7;

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::string worst;
  bool ok() const { return failures == 0; }
};

inline bool GradientsAgree(double analytic, double numeric, double* rel) {
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  *rel = scale > 0.0 ? diff / scale : 0.0;
  return diff <= kFdAbsFloor || *rel <= kFdRelTol;
}

// Compares Backward() gradients of a scalar loss with central differences
// for every entry of every parameter in `params`. `loss` builds the loss on a
// fresh graph reading parameters through Graph::Param.
inline GradCheck CheckGradients(ParamSet& params, const std::function<Var(Graph&)>& loss) {
  params.ZeroGrad();
  {
    Graph g;
    g.Backward(loss(g));
  }
  GradCheck result;
  for (auto& [path, tensor] : params) {
    const std::vector<double> analytic(tensor.grad().begin(), tensor.grad().end());
    for (std::size_t k = 0; k < tensor.numel(); ++k) {
      const double saved = tensor.data()[k];
      tensor.mutable_data()[k] = saved + kFdStep;
      double plus, minus;
      {
        Graph g(false);
        plus = loss(g).value().item();
      }
      tensor.mutable_data()[k] = saved - kFdStep;
      {
        Graph g(false);
        minus = loss(g).value().item();
      }
      tensor.mutable_data()[k] = saved;
      const double numeric = (plus - minus) / (2.0 * kFdStep);
      double rel = 0.0;
      const bool agree = GradientsAgree(analytic[k], numeric, &rel);
      ++result.checked;
      if (!agree) {
        ++result.failures;
        if (rel > result.max_rel_error) {
          result.worst = path + "[" + std::to_string(k) + "] analytic " + std::to_string(analytic[k]) +
                         " numeric " + std::to_string(numeric);
        }
      }
      if (!agree) result.max_rel_error = std::max(result.max_rel_error, rel);
    }
  }
  return result;
}

inline Tensor RandomTensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& x : t.mutable_data()) x = rng.Uniform(lo, hi);
  return t;
}

}  // namespace qfree::testing

#endif  // QFREE_TESTS_TEST_UTIL_H_
