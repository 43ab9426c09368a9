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

#ifndef QFREE_JOINT_TABLE_H_
#define QFREE_JOINT_TABLE_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace qfree {

using JointAction = std::vector<std::size_t>;

std::string JointActionString(std::span<const std::size_t> action);

// A real value for every joint action of n agents with k actions each.
// Flat order is row-major with agent 0 most significant, so for 3x3 the
// entries run (0,0), (0,1), ..., (2,2).
class JointTable {
 public:
  JointTable() = default;
  JointTable(std::size_t n_agents, std::size_t n_actions);
  JointTable(std::size_t n_agents, std::size_t n_actions, std::vector<double> values);

  std::size_t n_agents() const { return n_agents_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t size() const { return values_.size(); }

  std::size_t Encode(std::span<const std::size_t> action) const;
  JointAction Decode(std::size_t flat) const;

  double at(std::span<const std::size_t> action) const { return values_[Encode(action)]; }
  double& at(std::span<const std::size_t> action) { return values_[Encode(action)]; }
  double operator[](std::size_t flat) const { return values_[flat]; }
  double& operator[](std::size_t flat) { return values_[flat]; }

  std::span<const double> values() const { return values_; }
  double Max() const;
  // First maximizing joint action in flat order.
  JointAction Argmax() const;

 private:
  std::size_t n_agents_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> values_;
};

// Index of the first maximum; throws on an empty row.
std::size_t ArgmaxFirst(std::span<const double> row);

}  // namespace qfree

#endif  // QFREE_JOINT_TABLE_H_
