// Copyright 2026 The qcrowd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "qcrowd/core.hpp"
#include "qcrowd/random.hpp"
#include "qcrowd/world.hpp"

#include <tuple>
#include <utility>
#include <vector>

namespace qcrowd {

/// Which rater rates which item, after heavy rows and columns are pruned.
struct AssignmentPlan {
  MaskMatrix mask;
  Index pruned_rows = 0;  // rows that had more than 2k cells before pruning
  Index pruned_cols = 0;  // columns that had more than 2k cells after row pruning

  Index n() const { return mask.rows(); }
  Index m() const { return mask.cols(); }
  Eigen::VectorXi row_degree() const { return mask.cast<int>().rowwise().sum(); }
  Eigen::VectorXi col_degree() const { return mask.cast<int>().colwise().sum().transpose(); }

  std::vector<std::pair<Index, Index>> pairs() const {
    std::vector<std::pair<Index, Index>> out;
    for (Index i = 0; i < mask.rows(); ++i)
      for (Index j = 0; j < mask.cols(); ++j)
        if (mask(i, j)) out.emplace_back(i, j);
    return out;
  }
};

namespace detail {

// Removes uniformly random cells from `cells` until `keep` remain.
template <class Clear>
void prune_line(std::vector<Index>& cells, Index keep, RandomSource& rng, Clear clear) {
  rng.shuffle(cells.begin(), cells.end());
  for (std::size_t c = static_cast<std::size_t>(keep); c < cells.size(); ++c) clear(cells[c]);
}

}  // namespace detail

/// Includes each (rater, item) pair independently with probability k/m, then
/// trims every row above 2k cells and afterwards every column above 2k cells
/// by dropping uniformly random excess cells. Rows go first, in index order.
inline AssignmentPlan draw_assignment(Index n, Index m, Index k, RandomSource& rng) {
  AssignmentPlan plan;
  plan.mask = MaskMatrix::Zero(n, m);
  const double p = static_cast<double>(k) / static_cast<double>(m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j)
      if (p >= 1.0 || rng.bernoulli(p)) plan.mask(i, j) = 1;

  const Index limit = 2 * k;
  std::vector<Index> cells;
  for (Index i = 0; i < n; ++i) {
    cells.clear();
    for (Index j = 0; j < m; ++j)
      if (plan.mask(i, j)) cells.push_back(j);
    if (static_cast<Index>(cells.size()) <= limit) continue;
    ++plan.pruned_rows;
    detail::prune_line(cells, limit, rng, [&](Index j) { plan.mask(i, j) = 0; });
  }
  for (Index j = 0; j < m; ++j) {
    cells.clear();
    for (Index i = 0; i < n; ++i)
      if (plan.mask(i, j)) cells.push_back(i);
    if (static_cast<Index>(cells.size()) <= limit) continue;
    ++plan.pruned_cols;
    detail::prune_line(cells, limit, rng, [&](Index i) { plan.mask(i, j) = 0; });
  }
  return plan;
}

inline AssignmentPlan draw_assignment(const ValidatedConfig& cfg, RandomSource& rng) {
  return draw_assignment(cfg.n(), cfg.m(), cfg.k(), rng);
}

/// The requester's two rating masks, each item included with probability
/// k0/m independently in each.
inline std::pair<MaskVector, MaskVector> draw_self_ratings(Index m, Index k0, RandomSource& rng) {
  const double p = static_cast<double>(k0) / static_cast<double>(m);
  std::pair<MaskVector, MaskVector> masks{MaskVector::Zero(m), MaskVector::Zero(m)};
  for (Index j = 0; j < m; ++j) masks.first[j] = (p >= 1.0 || rng.bernoulli(p)) ? 1 : 0;
  for (Index j = 0; j < m; ++j) masks.second[j] = (p >= 1.0 || rng.bernoulli(p)) ? 1 : 0;
  return masks;
}

inline std::pair<MaskVector, MaskVector> draw_self_ratings(const ValidatedConfig& cfg,
                                                           RandomSource& rng) {
  return draw_self_ratings(cfg.m(), cfg.k0(), rng);
}

inline double draw_rating(double mean, NoiseModel noise, RandomSource& rng) {
  if (noise == NoiseModel::kNoiseless) return mean;
  return rng.bernoulli(mean) ? 1.0 : 0.0;
}

/// Realizes every rating on the plan. Reliable rows are drawn first; the
/// adversaries then see the plan and all reliable values before emitting
/// theirs.
inline ObservedRatings realize_observations(const AssignmentPlan& plan, const WorldModel& world,
                                            RandomSource& rng) {
  ObservedRatings obs;
  obs.mask = plan.mask;
  obs.values = Matrix::Zero(plan.n(), plan.m());
  for (std::size_t r = 0; r < world.reliable.size(); ++r) {
    const Index i = world.reliable[r];
    for (Index j = 0; j < plan.m(); ++j)
      if (plan.mask(i, j))
        obs.values(i, j) = draw_rating(world.a_star(static_cast<Index>(r), j), world.noise, rng);
  }
  adversary_fill(world, plan.mask, obs, rng);
  return obs;
}

/// Requester ratings on two fresh masks. Must be called after every rater
/// value has been realized.
inline RequesterRatings realize_requester(const ValidatedConfig& cfg, const WorldModel& world,
                                          RandomSource& mask_rng, RandomSource& value_rng) {
  RequesterRatings req;
  std::tie(req.mask, req.mask_prime) = draw_self_ratings(cfg, mask_rng);
  const Index m = cfg.m();
  req.r_tilde = Vector::Zero(m);
  req.r_tilde_prime = Vector::Zero(m);
  const Vector& r = world.ground_truth.r_star;
  for (Index j = 0; j < m; ++j)
    if (req.mask[j]) req.r_tilde[j] = draw_rating(r[j], world.noise, value_rng);
  for (Index j = 0; j < m; ++j)
    if (req.mask_prime[j]) req.r_tilde_prime[j] = draw_rating(r[j], world.noise, value_rng);
  return req;
}

}  // namespace qcrowd
