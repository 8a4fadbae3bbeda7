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

#include "qcrowd/svd.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qcrowd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using MaskVector = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

// Absolute slack on box and row-sum constraints, relative slack on the
// nuclear-norm ball. Solver, checks and tests all read these.
inline constexpr double kTolFeas = 1e-6;
inline constexpr double kTolNuc = 1e-4;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Adversary strategies

struct RandomSpam {
  double p_high = 0.5;
};
struct AntiCorrelated {};
struct SymmetricBlocks {
  double block_low = 0.8;  // off-block rating, 1 - epsilon in the block attack
};
struct DenseHalfPositive {
  Index block_size = 0;  // 0 selects round(3 * alpha * beta * n)
};
struct MirroredCopy {
  std::uint64_t permutation_seed = 1;
};

using AdversaryStrategy =
    std::variant<RandomSpam, AntiCorrelated, SymmetricBlocks, DenseHalfPositive,
                 MirroredCopy>;

inline std::string strategy_name(const AdversaryStrategy& s) {
  static constexpr const char* kNames[] = {"RandomSpam", "AntiCorrelated",
                                           "SymmetricBlocks", "DenseHalfPositive",
                                           "MirroredCopy"};
  return kNames[s.index()];
}

// ---------------------------------------------------------------------------
// World generation knobs

struct UniformTruth {};
struct BernoulliTruth {
  double q = 0.5;
};
struct TwoLevelTruth {
  double lo = 0.0;
  double hi = 1.0;
  Index hi_count = -1;  // -1 selects beta_m
};
using TruthDistribution = std::variant<UniformTruth, BernoulliTruth, TwoLevelTruth>;

enum class NoiseModel { kBernoulli, kNoiseless };

struct WorldSettings {
  TruthDistribution truth = UniformTruth{};
  NoiseModel noise = NoiseModel::kBernoulli;
  // Reliable rater i has expected ratings a_i + b_i * r*, b_i drawn in
  // [slope_min, slope_max] and a_i in [0, min(intercept_max, 1 - b_i)].
  // slope_min <= 0 selects 1/L.
  double slope_min = 0.0;
  double slope_max = 1.0;
  double intercept_max = 0.0;
};

// ---------------------------------------------------------------------------
// Solver knobs

struct SolverSettings {
  int max_iters = 2000;
  // Step size eta_t = eta0 / sqrt(t). eta0 = step0 when positive, otherwise
  // step_gain / ||A||_op.
  double step0 = 0.0;
  double step_gain = 1000.0;
  int dykstra_iters = 30;
  double stop_rel_obj = 1e-6;
  int stop_window = 25;
  double rho_scale = 1.0;
};

// ---------------------------------------------------------------------------
// Experiment configuration

struct ExperimentConfig {
  Index n = 0;
  Index m = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  Index k = 0;
  Index k0 = 0;
  double L = 1.0;
  double epsilon0 = 0.0;
  std::uint64_t seed = 0;
  AdversaryStrategy adversary = RandomSpam{};
  SolverSettings solver;
  WorldSettings world;
  // Use r~ for both scoring and the accept loop instead of a second vector.
  bool single_vector = false;
};

inline Index round_half_up(double x) {
  return static_cast<Index>(std::floor(x + 0.5));
}

/// A configuration that passed validation, with the derived integers and the
/// nuclear-norm radius fixed once.
class ValidatedConfig {
 public:
  const ExperimentConfig& raw() const { return cfg_; }
  Index n() const { return cfg_.n; }
  Index m() const { return cfg_.m; }
  double alpha() const { return cfg_.alpha; }
  double beta() const { return cfg_.beta; }
  double epsilon() const { return cfg_.epsilon; }
  double delta() const { return cfg_.delta; }
  Index k() const { return cfg_.k; }
  Index k0() const { return cfg_.k0; }
  double L() const { return cfg_.L; }
  double epsilon0() const { return cfg_.epsilon0; }
  std::uint64_t seed() const { return cfg_.seed; }
  const SolverSettings& solver() const { return cfg_.solver; }
  const WorldSettings& world() const { return cfg_.world; }
  const AdversaryStrategy& adversary() const { return cfg_.adversary; }

  Index beta_m() const { return beta_m_; }
  Index alpha_n() const { return alpha_n_; }
  /// (2 / (alpha eps)) * sqrt(alpha beta n m)
  double rho() const { return rho_; }
  /// rho times the solver's rho_scale knob; the radius the solver enforces.
  double effective_rho() const { return rho_ * cfg_.solver.rho_scale; }
  double slope_min() const {
    return cfg_.world.slope_min > 0.0 ? cfg_.world.slope_min : 1.0 / cfg_.L;
  }

 private:
  friend ValidatedConfig validate_config(const ExperimentConfig& cfg);
  ExperimentConfig cfg_;
  Index beta_m_ = 0;
  Index alpha_n_ = 0;
  double rho_ = 0.0;
};

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}
inline bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }
}  // namespace detail

/// Checks every constraint in declaration order and throws ConfigError naming
/// the first one violated.
inline ValidatedConfig validate_config(const ExperimentConfig& cfg) {
  using detail::require;
  require(cfg.n >= 1, "n must be a positive integer");
  require(cfg.m >= 1, "m must be a positive integer");
  require(cfg.m >= cfg.n, "m must be at least n");
  require(cfg.alpha > 0.0 && cfg.alpha <= 1.0, "alpha must lie in (0,1]");
  require(cfg.beta > 0.0 && cfg.beta <= 1.0, "beta must lie in (0,1]");
  require(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0, "epsilon must lie in (0,1]");
  require(cfg.delta > 0.0 && cfg.delta < 1.0, "delta must lie in (0,1)");
  require(cfg.k >= 1 && cfg.k <= cfg.m, "k must be an integer in [1,m]");
  require(cfg.k0 >= 1 && cfg.k0 <= cfg.m, "k0 must be an integer in [1,m]");
  require(cfg.L >= 1.0, "L must be at least 1");
  require(cfg.epsilon0 >= 0.0, "epsilon0 must be non-negative");

  const Index beta_m = round_half_up(cfg.beta * static_cast<double>(cfg.m));
  const Index alpha_n = round_half_up(cfg.alpha * static_cast<double>(cfg.n));
  require(beta_m >= 1, "round(beta*m) must be at least 1");
  require(alpha_n >= 1, "round(alpha*n) must be at least 1");

  const SolverSettings& s = cfg.solver;
  require(s.max_iters > 0, "solver.max_iters must be positive");
  require(s.step0 >= 0.0, "solver.step0 must be non-negative");
  require(s.step_gain > 0.0, "solver.step_gain must be positive");
  require(s.dykstra_iters > 0, "solver.dykstra_iters must be positive");
  require(s.stop_rel_obj > 0.0, "solver.stop_rel_obj must be positive");
  require(s.stop_window > 0, "solver.stop_window must be positive");
  require(s.rho_scale > 0.0, "solver.rho_scale must be positive");

  const WorldSettings& w = cfg.world;
  if (const auto* b = std::get_if<BernoulliTruth>(&w.truth)) {
    require(detail::in_unit(b->q), "world.truth.q must lie in [0,1]");
  } else if (const auto* t = std::get_if<TwoLevelTruth>(&w.truth)) {
    require(detail::in_unit(t->lo) && detail::in_unit(t->hi),
            "world.truth.lo and world.truth.hi must lie in [0,1]");
    require(t->hi_count <= cfg.m, "world.truth.hi_count must not exceed m");
  }
  const double slope_min = w.slope_min > 0.0 ? w.slope_min : 1.0 / cfg.L;
  require(slope_min * cfg.L >= 1.0 - 1e-12,
          "world.slope_min must be at least 1/L");
  require(slope_min <= w.slope_max && w.slope_max <= 1.0,
          "world slopes must satisfy slope_min <= slope_max <= 1");
  require(detail::in_unit(w.intercept_max), "world.intercept_max must lie in [0,1]");

  if (const auto* a = std::get_if<RandomSpam>(&cfg.adversary)) {
    require(detail::in_unit(a->p_high), "adversary.p_high must lie in [0,1]");
  } else if (const auto* b = std::get_if<SymmetricBlocks>(&cfg.adversary)) {
    require(detail::in_unit(b->block_low), "adversary.block_low must lie in [0,1]");
  } else if (const auto* d = std::get_if<DenseHalfPositive>(&cfg.adversary)) {
    require(d->block_size >= 0, "adversary.block_size must be non-negative");
  }

  ValidatedConfig v;
  v.cfg_ = cfg;
  v.beta_m_ = beta_m;
  v.alpha_n_ = alpha_n;
  const double nd = static_cast<double>(cfg.n);
  const double md = static_cast<double>(cfg.m);
  v.rho_ = 2.0 / (cfg.alpha * cfg.epsilon) * std::sqrt(cfg.alpha * cfg.beta * nd * md);
  return v;
}

// ---------------------------------------------------------------------------
// Domain records

/// True item qualities and the indicator of their top beta_m entries.
struct GroundTruth {
  Vector r_star;
  Vector t_star;
};

/// Indicator of the `count` largest entries of `scores`, ties toward the
/// smaller index.
inline std::vector<Index> top_indices(const Vector& scores, Index count) {
  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores[a] > scores[b]; });
  order.resize(static_cast<std::size_t>(std::clamp<Index>(count, 0, scores.size())));
  return order;
}

inline GroundTruth make_ground_truth(Vector r_star, Index beta_m) {
  GroundTruth gt;
  gt.t_star = Vector::Zero(r_star.size());
  for (Index j : top_indices(r_star, beta_m)) gt.t_star[j] = 1.0;
  gt.r_star = std::move(r_star);
  return gt;
}

/// Rater-by-item ratings; values are zero off the mask.
struct ObservedRatings {
  Matrix values;
  MaskMatrix mask;
};

/// The requester's own two rating passes.
struct RequesterRatings {
  Vector r_tilde;
  Vector r_tilde_prime;
  MaskVector mask;
  MaskVector mask_prime;
};

/// Binary item indicator.
struct SelectionSet {
  Vector t;
  Index size() const { return static_cast<Index>((t.array() > 0.5).count()); }
};

// ---------------------------------------------------------------------------
// Feasibility of recovered quantile matrices

struct FeasibilityResiduals {
  double box = 0.0;      // absolute
  double row_sum = 0.0;  // absolute
  double nuclear = 0.0;  // relative to the radius

  bool ok() const {
    return box <= kTolFeas && row_sum <= kTolFeas && nuclear <= kTolNuc;
  }
};

inline double nuclear_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return singular_values(M).sum();
}

inline double box_residual(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return std::max({0.0, -M.minCoeff(), M.maxCoeff() - 1.0});
}

inline double row_sum_residual(const Matrix& M, Index cap) {
  if (M.size() == 0) return 0.0;
  return std::max(0.0, M.rowwise().sum().maxCoeff() - static_cast<double>(cap));
}

inline double nuclear_residual(double nuclear, double rho) {
  return std::max(0.0, nuclear / rho - 1.0);
}

inline FeasibilityResiduals feasibility(const Matrix& M, Index cap, double rho) {
  return {box_residual(M), row_sum_residual(M, cap),
          nuclear_residual(nuclear_norm(M), rho)};
}

}  // namespace qcrowd
