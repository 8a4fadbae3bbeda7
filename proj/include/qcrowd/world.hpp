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

#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace qcrowd {

class ProfileError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class StrategyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MonotonicityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Ground truth

inline GroundTruth generate_ground_truth(Index m, Index beta_m, const TruthDistribution& dist,
                                         RandomSource& rng) {
  Vector r(m);
  if (std::holds_alternative<UniformTruth>(dist)) {
    for (Index j = 0; j < m; ++j) r[j] = rng.uniform();
  } else if (const auto* b = std::get_if<BernoulliTruth>(&dist)) {
    for (Index j = 0; j < m; ++j) r[j] = rng.bernoulli(b->q) ? 1.0 : 0.0;
  } else {
    const auto& t = std::get<TwoLevelTruth>(dist);
    const Index high = t.hi_count < 0 ? beta_m : t.hi_count;
    std::vector<Index> items(static_cast<std::size_t>(m));
    std::iota(items.begin(), items.end(), Index{0});
    rng.shuffle(items.begin(), items.end());
    r.setConstant(t.lo);
    for (Index h = 0; h < high; ++h) r[items[static_cast<std::size_t>(h)]] = t.hi;
  }
  return make_ground_truth(std::move(r), beta_m);
}

// ---------------------------------------------------------------------------
// Reliable rater profiles

struct AffineRater {
  double intercept = 0.0;  // a_i
  double slope = 1.0;      // b_i
};

/// Rows A*_i = a_i + b_i r*. Throws ProfileError if any row can leave [0,1].
inline Matrix affine_monotone_profile(const Vector& r_star, const std::vector<AffineRater>& raters) {
  Matrix a(static_cast<Index>(raters.size()), r_star.size());
  for (std::size_t i = 0; i < raters.size(); ++i) {
    const auto [intercept, slope] = raters[i];
    if (intercept < 0.0 || slope <= 0.0 || intercept + slope > 1.0 + 1e-12) {
      throw ProfileError("affine profile a=" + std::to_string(intercept) +
                         " b=" + std::to_string(slope) + " leaves [0,1]");
    }
    a.row(static_cast<Index>(i)) =
        (intercept + slope * r_star.array()).min(1.0).matrix().transpose();
  }
  return a;
}

inline std::vector<AffineRater> draw_affine_raters(Index count, double slope_min, double slope_max,
                                                   double intercept_max, RandomSource& rng) {
  std::vector<AffineRater> raters(static_cast<std::size_t>(count));
  for (auto& r : raters) {
    r.slope = slope_min + (slope_max - slope_min) * rng.uniform();
    r.intercept = std::min(intercept_max, 1.0 - r.slope) * rng.uniform();
  }
  return raters;
}

/// Largest violation of r_j - r_j' <= L (A_ij - A_ij') + eps0 over all rows
/// and all ordered pairs with r_j >= r_j'. Non-positive means the rows are
/// (L, eps0)-monotonic.
inline double monotonicity_violation(const Vector& r_star, const Matrix& a_star, double L,
                                     double eps0) {
  double worst = -std::numeric_limits<double>::infinity();
  const Index m = r_star.size();
  for (Index i = 0; i < a_star.rows(); ++i) {
    for (Index j = 0; j < m; ++j) {
      for (Index jp = 0; jp < m; ++jp) {
        if (r_star[j] < r_star[jp]) continue;
        const double lhs = r_star[j] - r_star[jp];
        const double rhs = L * (a_star(i, j) - a_star(i, jp)) + eps0;
        worst = std::max(worst, lhs - rhs);
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Adversaries

/// Concrete adversary roles fixed when the world is drawn.
struct AdversaryLayout {
  std::vector<Index> raters;                    // adversary row indices, ascending
  std::vector<Index> block_of;                  // block id per entry of `raters`
  std::vector<std::vector<Index>> block_items;  // own item group / positive half per block
  std::vector<Index> permutation;               // MirroredCopy column map j -> pi(j)
  std::vector<Index> mirror_source;             // reliable row (into a_star) copied per adversary
};

/// Everything about the population the requester cannot see.
struct WorldModel {
  GroundTruth ground_truth;
  std::vector<Index> reliable;  // ascending
  std::vector<char> is_reliable;
  Matrix a_star;  // |reliable| x m, row r belongs to rater reliable[r]
  NoiseModel noise = NoiseModel::kBernoulli;
  AdversaryStrategy adversary = RandomSpam{};
  AdversaryLayout layout;

  Index n() const { return static_cast<Index>(is_reliable.size()); }
  Index m() const { return ground_truth.r_star.size(); }
};

namespace detail {

/// Splits `count` consecutive members into blocks of `size`; the remainder
/// joins the last block.
inline std::vector<Index> split_blocks(Index count, Index size) {
  std::vector<Index> block(static_cast<std::size_t>(count));
  const Index blocks = std::max<Index>(1, count / size);
  for (Index a = 0; a < count; ++a) block[static_cast<std::size_t>(a)] = std::min(a / size, blocks - 1);
  return block;
}

inline Index block_count(const std::vector<Index>& block_of) {
  return block_of.empty() ? 0 : *std::max_element(block_of.begin(), block_of.end()) + 1;
}

}  // namespace detail

/// Draws the roles of the non-reliable raters. `raters` lists them ascending;
/// reliable-row count is needed for MirroredCopy.
inline AdversaryLayout build_adversary_layout(const AdversaryStrategy& strategy,
                                              std::vector<Index> raters, const GroundTruth& gt,
                                              Index alpha_n, Index beta_m, double alpha,
                                              double beta, Index n, Index reliable_count,
                                              RandomSource& rng) {
  AdversaryLayout layout;
  layout.raters = std::move(raters);
  const Index count = static_cast<Index>(layout.raters.size());
  const Index m = gt.r_star.size();
  if (count == 0) return layout;

  if (const auto* s = std::get_if<SymmetricBlocks>(&strategy)) {
    if (s->block_low < 0.0 || s->block_low > 1.0) throw StrategyError("block_low outside [0,1]");
    layout.block_of = detail::split_blocks(count, alpha_n);
    // Item groups of size beta_m come from the items outside T*, drawn in a
    // random order and reused cyclically once exhausted.
    std::vector<Index> outside;
    for (Index j = 0; j < m; ++j)
      if (gt.t_star[j] < 0.5) outside.push_back(j);
    if (outside.empty()) throw StrategyError("SymmetricBlocks needs items outside the quantile");
    rng.shuffle(outside.begin(), outside.end());
    const Index blocks = detail::block_count(layout.block_of);
    std::size_t cursor = 0;
    for (Index b = 0; b < blocks; ++b) {
      std::vector<Index> group;
      for (Index g = 0; g < beta_m && static_cast<std::size_t>(g) < outside.size(); ++g) {
        group.push_back(outside[cursor]);
        cursor = (cursor + 1) % outside.size();
      }
      std::sort(group.begin(), group.end());
      layout.block_items.push_back(std::move(group));
    }
  } else if (const auto* d = std::get_if<DenseHalfPositive>(&strategy)) {
    const Index size = d->block_size > 0
                           ? d->block_size
                           : std::max<Index>(1, round_half_up(3.0 * alpha * beta * static_cast<double>(n)));
    layout.block_of = detail::split_blocks(count, size);
    const Index blocks = detail::block_count(layout.block_of);
    std::vector<Index> items(static_cast<std::size_t>(m));
    for (Index b = 0; b < blocks; ++b) {
      std::iota(items.begin(), items.end(), Index{0});
      rng.shuffle(items.begin(), items.end());
      std::vector<Index> half(items.begin(), items.begin() + m / 2);
      std::sort(half.begin(), half.end());
      layout.block_items.push_back(std::move(half));
    }
  } else if (const auto* c = std::get_if<MirroredCopy>(&strategy)) {
    if (reliable_count == 0) throw StrategyError("MirroredCopy needs at least one reliable rater");
    layout.permutation.resize(static_cast<std::size_t>(m));
    std::iota(layout.permutation.begin(), layout.permutation.end(), Index{0});
    auto perm_rng = derive_rng(c->permutation_seed, "mirror-permutation");
    perm_rng.shuffle(layout.permutation.begin(), layout.permutation.end());
    for (Index a = 0; a < count; ++a) layout.mirror_source.push_back(a % reliable_count);
  } else if (const auto* p = std::get_if<RandomSpam>(&strategy)) {
    if (p->p_high < 0.0 || p->p_high > 1.0) throw StrategyError("p_high outside [0,1]");
  }
  return layout;
}

/// Intended (expected) ratings of adversary number `a` (position in
/// layout.raters) for every item.
inline Vector adversary_profile_row(const WorldModel& world, std::size_t a) {
  const Index m = world.m();
  const auto& layout = world.layout;
  Vector row(m);
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, RandomSpam>) {
          row.setConstant(s.p_high);
        } else if constexpr (std::is_same_v<S, AntiCorrelated>) {
          row = (1.0 - world.ground_truth.r_star.array()).matrix();
        } else if constexpr (std::is_same_v<S, SymmetricBlocks>) {
          row.setConstant(s.block_low);
          for (Index j : layout.block_items[static_cast<std::size_t>(layout.block_of[a])]) row[j] = 1.0;
        } else if constexpr (std::is_same_v<S, DenseHalfPositive>) {
          row.setZero();
          for (Index j : layout.block_items[static_cast<std::size_t>(layout.block_of[a])]) row[j] = 1.0;
        } else {
          const Index src = layout.mirror_source[a];
          for (Index j = 0; j < m; ++j) row[j] = world.a_star(src, layout.permutation[static_cast<std::size_t>(j)]);
        }
      },
      world.adversary);
  return row;
}

/// Full n x m matrix of expected ratings: A* on reliable rows, the
/// adversaries' intended pattern elsewhere.
inline Matrix expected_ratings(const WorldModel& world) {
  Matrix full(world.n(), world.m());
  for (std::size_t r = 0; r < world.reliable.size(); ++r)
    full.row(world.reliable[r]) = world.a_star.row(static_cast<Index>(r));
  for (std::size_t a = 0; a < world.layout.raters.size(); ++a)
    full.row(world.layout.raters[a]) = adversary_profile_row(world, a).transpose();
  return full;
}

/// Fills adversary rows of `observed` on the cells of `mask`. Reliable rows
/// of `observed` must already hold their realized values; adversaries may
/// read them.
inline void adversary_fill(const WorldModel& world, const MaskMatrix& mask, ObservedRatings& observed,
                           RandomSource& rng) {
  const Index m = world.m();
  const auto& layout = world.layout;
  for (std::size_t a = 0; a < layout.raters.size(); ++a) {
    const Index i = layout.raters[a];
    if (const auto* s = std::get_if<RandomSpam>(&world.adversary)) {
      for (Index j = 0; j < m; ++j)
        if (mask(i, j)) observed.values(i, j) = rng.bernoulli(s->p_high) ? 1.0 : 0.0;
      continue;
    }
    if (std::holds_alternative<MirroredCopy>(world.adversary)) {
      const Index src = layout.mirror_source[a];
      const Index src_row = world.reliable[static_cast<std::size_t>(src)];
      for (Index j = 0; j < m; ++j) {
        if (!mask(i, j)) continue;
        const Index pj = layout.permutation[static_cast<std::size_t>(j)];
        if (observed.mask(src_row, pj)) {
          observed.values(i, j) = observed.values(src_row, pj);
        } else {
          const double mean = world.a_star(src, pj);
          observed.values(i, j) =
              world.noise == NoiseModel::kNoiseless ? mean : (rng.bernoulli(mean) ? 1.0 : 0.0);
        }
      }
      continue;
    }
    const Vector row = adversary_profile_row(world, a);
    for (Index j = 0; j < m; ++j)
      if (mask(i, j)) observed.values(i, j) = row[j];
  }
}

// ---------------------------------------------------------------------------
// World assembly

/// Assembles a world from explicit parts and checks (L, eps0)
/// monotonicity of the reliable rows before returning.
inline WorldModel make_world(GroundTruth gt, std::vector<Index> reliable, Matrix a_star, Index n,
                             NoiseModel noise, AdversaryStrategy adversary, AdversaryLayout layout,
                             double L, double eps0) {
  WorldModel w;
  w.ground_truth = std::move(gt);
  std::sort(reliable.begin(), reliable.end());
  w.is_reliable.assign(static_cast<std::size_t>(n), 0);
  for (Index i : reliable) w.is_reliable[static_cast<std::size_t>(i)] = 1;
  w.reliable = std::move(reliable);
  w.a_star = std::move(a_star);
  w.noise = noise;
  w.adversary = std::move(adversary);
  w.layout = std::move(layout);
  const double violation = monotonicity_violation(w.ground_truth.r_star, w.a_star, L, eps0);
  if (violation > 1e-12) {
    throw MonotonicityError("reliable raters are not (L, eps0)-monotonic: excess " +
                            std::to_string(violation));
  }
  return w;
}

/// Draws a complete world for `cfg`: ground truth, a random reliable set of
/// size alpha_n, affine monotone profiles, and the adversary layout.
inline WorldModel generate_world(const ValidatedConfig& cfg, RandomSource& rng) {
  const Index n = cfg.n();
  GroundTruth gt = generate_ground_truth(cfg.m(), cfg.beta_m(), cfg.world().truth, rng);

  std::vector<Index> raters(static_cast<std::size_t>(n));
  std::iota(raters.begin(), raters.end(), Index{0});
  rng.shuffle(raters.begin(), raters.end());
  std::vector<Index> reliable(raters.begin(), raters.begin() + cfg.alpha_n());
  std::vector<Index> adversaries(raters.begin() + cfg.alpha_n(), raters.end());
  std::sort(reliable.begin(), reliable.end());
  std::sort(adversaries.begin(), adversaries.end());

  const auto profile = draw_affine_raters(cfg.alpha_n(), cfg.slope_min(), cfg.world().slope_max,
                                          cfg.world().intercept_max, rng);
  Matrix a_star = affine_monotone_profile(gt.r_star, profile);
  AdversaryLayout layout = build_adversary_layout(cfg.adversary(), std::move(adversaries), gt,
                                                  cfg.alpha_n(), cfg.beta_m(), cfg.alpha(),
                                                  cfg.beta(), n, cfg.alpha_n(), rng);
  return make_world(std::move(gt), std::move(reliable), std::move(a_star), n, cfg.world().noise,
                    cfg.adversary(), std::move(layout), cfg.L(), cfg.epsilon0());
}

}  // namespace qcrowd
