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

#include "qcrowd/assignment.hpp"
#include "qcrowd/world.hpp"

#include <catch_amalgamated.hpp>

#include "oracles.hpp"

#include <cmath>

using namespace qcrowd;

TEST_CASE("k = m assigns every pair and prunes nothing") {
  auto rng = derive_rng(3, "assign");
  const AssignmentPlan plan = draw_assignment(6, 9, 9, rng);
  CHECK(plan.mask.cast<int>().sum() == 54);
  CHECK(plan.pruned_rows == 0);
  CHECK(plan.pruned_cols == 0);
  CHECK(plan.pairs().size() == 54);
}

TEST_CASE("degrees never exceed 2k after pruning") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto rng = derive_rng(seed, "assign");
    const Index k = 1 + static_cast<Index>(seed % 3);
    const AssignmentPlan plan = draw_assignment(30, 40, k, rng);
    CHECK(plan.row_degree().maxCoeff() <= 2 * k);
    CHECK(plan.col_degree().maxCoeff() <= 2 * k);
  }
}

TEST_CASE("row pruning frequency matches the binomial tail") {
  // n*m draws with p = k/m; a row is pruned when its Binomial(m, k/m) degree
  // exceeds 2k.
  const Index n = 200, m = 60, k = 3;
  const double tail = oracle::binomial_upper_tail(static_cast<int>(m), double(k) / m, static_cast<int>(2 * k));
  auto rng = derive_rng(11, "assign");
  double pruned = 0.0;
  constexpr int kPlans = 100;
  for (int t = 0; t < kPlans; ++t) pruned += static_cast<double>(draw_assignment(n, m, k, rng).pruned_rows);
  const double rows = static_cast<double>(n) * kPlans;
  const double sigma = std::sqrt(tail * (1.0 - tail) / rows);
  CHECK(std::abs(pruned / rows - tail) < 5.0 * sigma);
}

TEST_CASE("pair inclusion rate is k/m before pruning bites") {
  const Index n = 50, m = 200, k = 40;  // 2k far above the mean degree
  auto rng = derive_rng(5, "assign");
  const AssignmentPlan plan = draw_assignment(n, m, k, rng);
  const double cells = static_cast<double>(n * m);
  const double p = double(k) / m;
  CHECK(plan.pruned_rows == 0);
  CHECK(std::abs(plan.mask.cast<double>().sum() / cells - p) < 5.0 * std::sqrt(p * (1 - p) / cells));
}

TEST_CASE("self-rating masks are independent with rate k0/m") {
  const Index m = 100, k0 = 30;
  auto rng = derive_rng(9, "self");
  constexpr int kDraws = 2000;
  double both = 0.0, first = 0.0, second = 0.0;
  for (int t = 0; t < kDraws; ++t) {
    const auto [a, b] = draw_self_ratings(m, k0, rng);
    for (Index j = 0; j < m; ++j) {
      first += a[j];
      second += b[j];
      both += a[j] * b[j];
    }
  }
  const double cells = double(m) * kDraws;
  const double p = 0.3;
  CHECK(std::abs(first / cells - p) < 5.0 * std::sqrt(p * (1 - p) / cells));
  CHECK(std::abs(second / cells - p) < 5.0 * std::sqrt(p * (1 - p) / cells));
  CHECK(std::abs(both / cells - p * p) < 5.0 * std::sqrt(p * p * (1 - p * p) / cells));
}

TEST_CASE("ratings are zero off the mask and binary under Bernoulli noise") {
  ExperimentConfig c;
  c.n = 20;
  c.m = 30;
  c.alpha = 0.5;
  c.beta = 0.2;
  c.epsilon = 0.5;
  c.delta = 0.1;
  c.k = 6;
  c.k0 = 10;
  const ValidatedConfig cfg = validate_config(c);
  auto wrng = derive_rng(1, "world");
  const WorldModel world = generate_world(cfg, wrng);
  auto arng = derive_rng(1, "assign");
  const AssignmentPlan plan = draw_assignment(cfg, arng);
  auto rrng = derive_rng(1, "ratings");
  const ObservedRatings obs = realize_observations(plan, world, rrng);
  for (Index i = 0; i < c.n; ++i) {
    for (Index j = 0; j < c.m; ++j) {
      if (!plan.mask(i, j)) CHECK(obs.values(i, j) == 0.0);
      else CHECK((obs.values(i, j) == 0.0 || obs.values(i, j) == 1.0));
    }
  }
  auto mrng = derive_rng(1, "self-ratings");
  auto vrng = derive_rng(1, "self-values");
  const RequesterRatings req = realize_requester(cfg, world, mrng, vrng);
  for (Index j = 0; j < c.m; ++j) {
    if (!req.mask[j]) CHECK(req.r_tilde[j] == 0.0);
    if (!req.mask_prime[j]) CHECK(req.r_tilde_prime[j] == 0.0);
  }
}

TEST_CASE("Bernoulli ratings have the profile as mean") {
  auto rng = derive_rng(2, "noise");
  constexpr int kDraws = 100000;
  double sum = 0.0;
  for (int t = 0; t < kDraws; ++t) sum += draw_rating(0.35, NoiseModel::kBernoulli, rng);
  CHECK(std::abs(sum / kDraws - 0.35) < 5.0 * std::sqrt(0.35 * 0.65 / kDraws));
  CHECK(draw_rating(0.35, NoiseModel::kNoiseless, rng) == 0.35);
}
