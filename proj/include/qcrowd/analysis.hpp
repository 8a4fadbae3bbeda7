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

#include "qcrowd/assignment.hpp"
#include "qcrowd/core.hpp"
#include "qcrowd/linalg.hpp"
#include "qcrowd/quantile.hpp"
#include "qcrowd/random.hpp"
#include "qcrowd/solver.hpp"
#include "qcrowd/world.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qcrowd {

/// (1/beta_m) (sum_{T*} r* - sum_T r*)
inline double quality_gap(const SelectionSet& T, const GroundTruth& gt, Index beta_m) {
  return (gt.t_star.dot(gt.r_star) - T.t.dot(gt.r_star)) / static_cast<double>(beta_m);
}

/// Reliable rows replaced by (k/m) A*, other rows copied from the
/// observations.
inline Matrix denoised_matrix(const WorldModel& world, const ObservedRatings& ratings, Index k) {
  Matrix B = ratings.values;
  const double scale = static_cast<double>(k) / static_cast<double>(world.m());
  for (std::size_t r = 0; r < world.reliable.size(); ++r)
    B.row(world.reliable[r]) = scale * world.a_star.row(static_cast<Index>(r));
  return B;
}

/// D_i = sum_j M_ij (r~_j - (k0/m) r*_j)
inline Vector row_deviations(const Matrix& M, const Vector& r_tilde, const Vector& r_star, Index k0) {
  const double scale = static_cast<double>(k0) / static_cast<double>(r_star.size());
  return M * (r_tilde - scale * r_star);
}

/// max over |V| >= v of |mean_{i in V} D_i|. The mean of the s largest
/// entries falls as s grows, so the maximum sits at |V| = v on the top or
/// bottom tail.
inline double max_set_deviation(const Vector& D, Index v) {
  std::vector<double> d(D.data(), D.data() + D.size());
  std::sort(d.begin(), d.end());
  const auto count = static_cast<std::size_t>(std::clamp<Index>(v, 1, D.size()));
  double low = 0.0;
  double high = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    low += d[i];
    high += d[d.size() - 1 - i];
  }
  return std::max(std::abs(low), std::abs(high)) / static_cast<double>(count);
}

/// Largest |mean D_V| over `samples` uniformly random sets of every size in
/// [v, n]. Never exceeds max_set_deviation.
inline double sampled_set_deviation(const Vector& D, Index v, int samples, RandomSource& rng) {
  const Index n = D.size();
  std::vector<Index> idx(static_cast<std::size_t>(n));
  double worst = 0.0;
  for (Index size = std::max<Index>(v, 1); size <= n; ++size) {
    for (int s = 0; s < samples; ++s) {
      std::iota(idx.begin(), idx.end(), Index{0});
      // Partial Fisher-Yates for the first `size` positions.
      for (Index p = 0; p < size; ++p) {
        const auto q = p + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - p)));
        std::swap(idx[static_cast<std::size_t>(p)], idx[static_cast<std::size_t>(q)]);
      }
      double sum = 0.0;
      for (Index p = 0; p < size; ++p) sum += D[idx[static_cast<std::size_t>(p)]];
      worst = std::max(worst, std::abs(sum) / static_cast<double>(size));
    }
  }
  return worst;
}

struct MonotonicityGaps {
  double g_a = 0.0;  // (1/|C|)(1/beta_m) sum_{i in C} sum_j (T*_j - M_ij) A*_ij
  double g_r = 0.0;  // same with r*_j in place of A*_ij
};

inline MonotonicityGaps monotonicity_gaps(const WorldModel& world, const Matrix& M, Index beta_m) {
  MonotonicityGaps g;
  const Vector& t_star = world.ground_truth.t_star;
  const Vector& r_star = world.ground_truth.r_star;
  for (std::size_t r = 0; r < world.reliable.size(); ++r) {
    const Vector diff = t_star - M.row(world.reliable[r]).transpose();
    g.g_a += diff.dot(world.a_star.row(static_cast<Index>(r)).transpose());
    g.g_r += diff.dot(r_star);
  }
  const double norm = static_cast<double>(world.reliable.size()) * static_cast<double>(beta_m);
  g.g_a /= norm;
  g.g_r /= norm;
  return g;
}

// ---------------------------------------------------------------------------
// Trials

struct TrialResult {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  Index k = 0;
  double quality_gap = 0.0;
  SolveReport solver;
  int round_iters = 0;
  bool accepted = false;
  bool early_accept = false;
  Index selection_size = 0;
  bool cardinality_ok = false;
  bool feasible = false;
  double opnorm = 0.0;          // ||A~ - B||_op
  double max_deviation = 0.0;   // max over |V| >= alpha_n of |mean D_V|
  double deviation_bound = 0.0; // eps beta k0
  MonotonicityGaps gaps;
  Index pruned_rows = 0;
  Index pruned_cols = 0;
};

/// Every intermediate object of one simulated trial.
struct TrialArtifacts {
  WorldModel world;
  AssignmentPlan plan;
  ObservedRatings observed;
  RequesterRatings requester;
  SolveResult solved;
  QuantileRecovery recovery;
};

/// Runs the full pipeline for one seed: world, assignment, rater values,
/// then the requester's own ratings, matrix recovery and quantile recovery.
/// Each stage reads its own named stream derived from `seed`.
inline TrialArtifacts simulate_trial(const ValidatedConfig& cfg, std::uint64_t seed) {
  auto world_rng = derive_rng(seed, "world");
  auto assign_rng = derive_rng(seed, "assign");
  auto rating_rng = derive_rng(seed, "ratings");
  auto self_rng = derive_rng(seed, "self-ratings");
  auto self_value_rng = derive_rng(seed, "self-values");
  auto round_rng = derive_rng(seed, "rounding");

  TrialArtifacts a;
  a.world = generate_world(cfg, world_rng);
  a.plan = draw_assignment(cfg, assign_rng);
  a.observed = realize_observations(a.plan, a.world, rating_rng);
  a.requester = realize_requester(cfg, a.world, self_rng, self_value_rng);
  a.solved = solve_recover_M(a.observed, cfg);
  const Vector& r_accept = cfg.raw().single_vector ? a.requester.r_tilde : a.requester.r_tilde_prime;
  a.recovery = recover_quantile(a.solved.matrix, a.requester.r_tilde, r_accept, cfg, round_rng);
  return a;
}

inline TrialResult measure_trial(const ValidatedConfig& cfg, const TrialArtifacts& a) {
  TrialResult out;
  out.k = cfg.k();
  out.pruned_rows = a.plan.pruned_rows;
  out.pruned_cols = a.plan.pruned_cols;
  out.solver = a.solved.report;
  out.feasible = a.solved.report.residuals.ok();

  const RoundingTrace& trace = a.recovery.trace;
  out.round_iters = trace.iterations;
  out.accepted = trace.accepted;
  out.early_accept = trace.early_accept;
  out.selection_size = a.recovery.selection.size();
  out.cardinality_ok = out.selection_size <= cfg.beta_m();
  out.quality_gap = quality_gap(a.recovery.selection, a.world.ground_truth, cfg.beta_m());

  out.opnorm = operator_norm(a.observed.values - denoised_matrix(a.world, a.observed, cfg.k()));
  const Vector D = row_deviations(a.solved.matrix, a.requester.r_tilde, a.world.ground_truth.r_star, cfg.k0());
  out.max_deviation = max_set_deviation(D, cfg.alpha_n());
  out.deviation_bound = cfg.epsilon() * cfg.beta() * static_cast<double>(cfg.k0());
  out.gaps = monotonicity_gaps(a.world, a.solved.matrix, cfg.beta_m());
  return out;
}

inline TrialResult run_trial(const ValidatedConfig& cfg, std::uint64_t seed) {
  TrialResult out = measure_trial(cfg, simulate_trial(cfg, seed));
  out.seed = seed;
  return out;
}

// ---------------------------------------------------------------------------
// Summaries

inline double quantile_of(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline double median_of(std::vector<double> values) { return quantile_of(std::move(values), 0.5); }

struct SampleStats {
  double median = 0.0;
  double mean = 0.0;
  double ci_lo = 0.0;  // normal-approximation 95% interval for the mean
  double ci_hi = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
};

inline SampleStats sample_stats(const std::vector<double>& values) {
  SampleStats s;
  if (values.empty()) return s;
  const double count = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= count;
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  var = values.size() > 1 ? var / (count - 1.0) : 0.0;
  const double half = 1.96 * std::sqrt(var / count);
  s.ci_lo = s.mean - half;
  s.ci_hi = s.mean + half;
  s.median = median_of(values);
  s.q10 = quantile_of(values, 0.1);
  s.q90 = quantile_of(values, 0.9);
  return s;
}

/// One summarized grid point.
struct SweepRow {
  Index k = 0;
  Index k0 = 0;
  int trials = 0;
  SampleStats gap;
  SampleStats opnorm_per_sqrt_k;
  SampleStats deviation;
  double deviation_bound = 0.0;
  double deviation_violation_rate = 0.0;
  double converged_fraction = 0.0;
  double accepted_fraction = 0.0;
};

inline SweepRow summarize(const std::vector<TrialResult>& trials) {
  SweepRow row;
  row.trials = static_cast<int>(trials.size());
  if (trials.empty()) return row;
  row.k = trials.front().k;
  row.deviation_bound = trials.front().deviation_bound;
  std::vector<double> gap, op, dev;
  int violations = 0, converged = 0, accepted = 0;
  for (const auto& t : trials) {
    gap.push_back(t.quality_gap);
    op.push_back(t.opnorm / std::sqrt(static_cast<double>(t.k)));
    dev.push_back(t.max_deviation);
    violations += t.max_deviation > t.deviation_bound ? 1 : 0;
    converged += t.solver.converged() ? 1 : 0;
    accepted += t.accepted ? 1 : 0;
  }
  const double count = static_cast<double>(trials.size());
  row.gap = sample_stats(gap);
  row.opnorm_per_sqrt_k = sample_stats(op);
  row.deviation = sample_stats(dev);
  row.deviation_violation_rate = violations / count;
  row.converged_fraction = converged / count;
  row.accepted_fraction = accepted / count;
  return row;
}

/// Runs `trials` seeds at every grid point (seeds derived from each point's
/// own master seed and the trial index) and summarizes each point. Rows come
/// back in grid order.
inline std::vector<SweepRow> concentration_sweep(const std::vector<ValidatedConfig>& grid, int trials,
                                                 std::vector<std::vector<TrialResult>>* raw = nullptr) {
  std::vector<SweepRow> rows;
  for (const auto& cfg : grid) {
    std::vector<TrialResult> results;
    for (int t = 0; t < trials; ++t) {
      TrialResult r = run_trial(cfg, trial_seed(cfg.seed(), static_cast<std::uint64_t>(t)));
      r.index = static_cast<std::uint64_t>(t);
      results.push_back(std::move(r));
    }
    SweepRow row = summarize(results);
    row.k0 = cfg.k0();
    rows.push_back(row);
    if (raw) raw->push_back(std::move(results));
  }
  return rows;
}

}  // namespace qcrowd
