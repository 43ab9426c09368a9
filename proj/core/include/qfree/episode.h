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

#ifndef QFREE_EPISODE_H_
#define QFREE_EPISODE_H_

#include <cstddef>
#include <span>
#include <vector>

#include "qfree/env.h"
#include "qfree/tensor.h"

namespace qfree {

// One recorded episode padded to a fixed number of steps T. Observation slot
// t holds the observations before step t; slot T holds the final successor
// observations. Steps beyond the episode end have mask 0.
struct Episode {
  std::size_t steps = 0;
  std::size_t n_agents = 0;
  std::size_t obs_dim = 0;
  std::vector<double> obs;           // [(T + 1) x n x obs_dim]
  std::vector<std::size_t> actions;  // [T x n]
  std::vector<double> reward;        // [T]
  std::vector<double> done;          // [T]
  std::vector<double> mask;          // [T]
  std::size_t length = 0;            // number of valid steps
  double episode_return = 0.0;

  Episode() = default;
  Episode(std::size_t steps, std::size_t n_agents, std::size_t obs_dim);

  void SetObservations(std::size_t t, const Observations& obs_t);
  void Record(std::size_t t, std::span<const std::size_t> joint_action, double r, bool terminal);
};

// B episodes stacked for batched recurrent training.
class EpisodeBatch {
 public:
  EpisodeBatch() = default;
  explicit EpisodeBatch(std::vector<Episode> episodes);

  std::size_t batch() const { return episodes_.size(); }
  std::size_t steps() const { return steps_; }
  std::size_t n_agents() const { return n_agents_; }
  std::size_t obs_dim() const { return obs_dim_; }
  const std::vector<Episode>& episodes() const { return episodes_; }

  // [B*n x obs_dim], rows ordered (episode, agent).
  Tensor ObsRows(std::size_t t) const;
  // [B x n*obs_dim]: all agents' current observations per episode.
  Tensor JointInfo(std::size_t t) const;
  // B*n actions at step t, ordered (episode, agent).
  std::vector<std::size_t> Actions(std::size_t t) const;
  // [B x 1] columns for step t.
  Tensor Rewards(std::size_t t) const;
  Tensor Done(std::size_t t) const;
  Tensor Mask(std::size_t t) const;
  double MaskTotal() const;

  // Returns a copy padded with `extra` masked steps (zero observations).
  EpisodeBatch Padded(std::size_t extra) const;

 private:
  std::vector<Episode> episodes_;
  std::size_t steps_ = 0;
  std::size_t n_agents_ = 0;
  std::size_t obs_dim_ = 0;
};

}  // namespace qfree

#endif  // QFREE_EPISODE_H_
