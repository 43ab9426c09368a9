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

#include "qfree/episode.h"

#include <algorithm>
#include <stdexcept>

namespace qfree {

Episode::Episode(std::size_t steps, std::size_t n_agents, std::size_t obs_dim)
    : steps(steps),
      n_agents(n_agents),
      obs_dim(obs_dim),
      obs((steps + 1) * n_agents * obs_dim, 0.0),
      actions(steps * n_agents, 0),
      reward(steps, 0.0),
      done(steps, 0.0),
      mask(steps, 0.0) {}

void Episode::SetObservations(std::size_t t, const Observations& obs_t) {
  if (t > steps || obs_t.size() != n_agents) throw std::out_of_range("episode: bad observation slot");
  for (std::size_t i = 0; i < n_agents; ++i) {
    if (obs_t[i].size() != obs_dim) throw DimensionError("episode: observation width mismatch");
    std::copy(obs_t[i].begin(), obs_t[i].end(), obs.begin() + (t * n_agents + i) * obs_dim);
  }
}

void Episode::Record(std::size_t t, std::span<const std::size_t> joint_action, double r,
                     bool terminal) {
  if (t >= steps || joint_action.size() != n_agents) throw std::out_of_range("episode: bad step");
  std::copy(joint_action.begin(), joint_action.end(), actions.begin() + t * n_agents);
  reward[t] = r;
  done[t] = terminal ? 1.0 : 0.0;
  mask[t] = 1.0;
  length = t + 1;
  episode_return += r;
}

EpisodeBatch::EpisodeBatch(std::vector<Episode> episodes) : episodes_(std::move(episodes)) {
  if (episodes_.empty()) throw std::invalid_argument("episode batch: no episodes");
  steps_ = episodes_[0].steps;
  n_agents_ = episodes_[0].n_agents;
  obs_dim_ = episodes_[0].obs_dim;
  for (const Episode& e : episodes_) {
    if (e.steps != steps_ || e.n_agents != n_agents_ || e.obs_dim != obs_dim_) {
      throw DimensionError("episode batch: episodes have different layouts");
    }
  }
}

Tensor EpisodeBatch::ObsRows(std::size_t t) const {
  Tensor out({batch() * n_agents_, obs_dim_});
  const std::size_t width = n_agents_ * obs_dim_;
  for (std::size_t b = 0; b < batch(); ++b) {
    std::copy_n(episodes_[b].obs.begin() + t * width, width, out.mutable_data().begin() + b * width);
  }
  return out;
}

Tensor EpisodeBatch::JointInfo(std::size_t t) const {
  Tensor rows = ObsRows(t);
  return Tensor({batch(), n_agents_ * obs_dim_}, std::move(rows.storage()));
}

std::vector<std::size_t> EpisodeBatch::Actions(std::size_t t) const {
  std::vector<std::size_t> out;
  out.reserve(batch() * n_agents_);
  for (const Episode& e : episodes_) {
    out.insert(out.end(), e.actions.begin() + t * n_agents_, e.actions.begin() + (t + 1) * n_agents_);
  }
  return out;
}

namespace {

Tensor Column(const std::vector<Episode>& episodes, std::size_t t,
              const std::vector<double> Episode::*field) {
  Tensor out({episodes.size(), 1});
  for (std::size_t b = 0; b < episodes.size(); ++b) out[b] = (episodes[b].*field)[t];
  return out;
}

}  // namespace

Tensor EpisodeBatch::Rewards(std::size_t t) const { return Column(episodes_, t, &Episode::reward); }
Tensor EpisodeBatch::Done(std::size_t t) const { return Column(episodes_, t, &Episode::done); }
Tensor EpisodeBatch::Mask(std::size_t t) const { return Column(episodes_, t, &Episode::mask); }

double EpisodeBatch::MaskTotal() const {
  double total = 0.0;
  for (const Episode& e : episodes_) {
    for (double m : e.mask) total += m;
  }
  return total;
}

EpisodeBatch EpisodeBatch::Padded(std::size_t extra) const {
  std::vector<Episode> padded;
  padded.reserve(batch());
  for (const Episode& e : episodes_) {
    Episode p(e.steps + extra, e.n_agents, e.obs_dim);
    std::copy(e.obs.begin(), e.obs.end(), p.obs.begin());
    std::copy(e.actions.begin(), e.actions.end(), p.actions.begin());
    std::copy(e.reward.begin(), e.reward.end(), p.reward.begin());
    std::copy(e.done.begin(), e.done.end(), p.done.begin());
    std::copy(e.mask.begin(), e.mask.end(), p.mask.begin());
    p.length = e.length;
    p.episode_return = e.episode_return;
    padded.push_back(std::move(p));
  }
  return EpisodeBatch(std::move(padded));
}

}  // namespace qfree
