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

#include "qfree/joint_table.h"

#include <stdexcept>

namespace qfree {

std::string JointActionString(std::span<const std::size_t> action) {
  std::string out = "(";
  for (std::size_t i = 0; i < action.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(action[i]);
  }
  return out + ")";
}

JointTable::JointTable(std::size_t n_agents, std::size_t n_actions)
    : n_agents_(n_agents), n_actions_(n_actions) {
  if (n_agents == 0 || n_actions == 0) throw std::invalid_argument("joint table: empty dimensions");
  std::size_t size = 1;
  for (std::size_t i = 0; i < n_agents; ++i) size *= n_actions;
  values_.assign(size, 0.0);
}

JointTable::JointTable(std::size_t n_agents, std::size_t n_actions, std::vector<double> values)
    : JointTable(n_agents, n_actions) {
  if (values.size() != values_.size()) {
    throw std::invalid_argument("joint table: expected " + std::to_string(values_.size()) +
                                " values, got " + std::to_string(values.size()));
  }
  values_ = std::move(values);
}

std::size_t JointTable::Encode(std::span<const std::size_t> action) const {
  if (action.size() != n_agents_) {
    throw std::invalid_argument("joint action " + JointActionString(action) + " has wrong arity");
  }
  std::size_t flat = 0;
  for (std::size_t a : action) {
    if (a >= n_actions_) {
      throw std::out_of_range("joint action " + JointActionString(action) + " out of range");
    }
    flat = flat * n_actions_ + a;
  }
  return flat;
}

JointAction JointTable::Decode(std::size_t flat) const {
  if (flat >= values_.size()) throw std::out_of_range("joint table index out of range");
  JointAction action(n_agents_);
  for (std::size_t i = n_agents_; i-- > 0;) {
    action[i] = flat % n_actions_;
    flat /= n_actions_;
  }
  return action;
}

double JointTable::Max() const { return values_[ArgmaxFirst(values_)]; }

JointAction JointTable::Argmax() const { return Decode(ArgmaxFirst(values_)); }

std::size_t ArgmaxFirst(std::span<const double> row) {
  if (row.empty()) throw std::invalid_argument("argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

}  // namespace qfree
