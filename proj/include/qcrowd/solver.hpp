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

// Recovery of per-rater quantile matrices:
//
//   maximize <A, M>  subject to  0 <= M_ij <= 1,
//                                sum_j M_ij <= cap        for every row,
//                                ||M||_* <= rho.
//
// Solved by projected ascent, M <- P(M + eta_t A), where P is Dykstra's
// alternating projection between the row set (box plus capped sum, separable
// per row) and the nuclear-norm ball. Each of the two projections is exact.

#pragma once

#include "qcrowd/core.hpp"
#include "qcrowd/linalg.hpp"

#include <chrono>
#include <stdexcept>
#include <vector>

namespace qcrowd {

using QuantileMatrix = Matrix;

// ---------------------------------------------------------------------------
// Projections

/// Euclidean projection of v onto {x in [0,1]^m : sum x <= cap}.
inline Vector project_capped_box_simplex(const Vector& v, double cap) {
  Vector x = v.cwiseMax(0.0).cwiseMin(1.0);
  if (x.sum() <= cap) return x;

  // sum_j clip(v_j - theta, 0, 1) is non-increasing in theta; it exceeds cap
  // at 0 and is 0 at max(v).
  auto clipped_sum = [&](double theta) {
    return (v.array() - theta).max(0.0).min(1.0).sum();
  };
  double lo = 0.0;
  double hi = v.maxCoeff();
  while (hi - lo > 1e-10 * std::max(1.0, std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    if (clipped_sum(mid) > cap) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  // Exact shift for the active pattern found at hi; keep hi if the pattern
  // does not reproduce itself.
  double theta = hi;
  double free_sum = 0.0;
  double upper = 0.0;
  Index free_count = 0;
  for (Index j = 0; j < v.size(); ++j) {
    const double z = v[j] - hi;
    if (z >= 1.0) {
      upper += 1.0;
    } else if (z > 0.0) {
      free_sum += v[j];
      ++free_count;
    }
  }
  if (free_count > 0) {
    const double exact = (free_sum + upper - cap) / static_cast<double>(free_count);
    if (exact >= lo - 1e-12 && exact <= hi + 1e-12 && clipped_sum(exact) <= cap + 1e-12) {
      theta = exact;
    }
  }
  x = (v.array() - theta).max(0.0).min(1.0).matrix();
  return x;
}

/// Applies the capped box-simplex projection to every row.
inline Matrix project_rows(const Matrix& Z, double cap) {
  Matrix out(Z.rows(), Z.cols());
  for (Index i = 0; i < Z.rows(); ++i) out.row(i) = project_capped_box_simplex(Z.row(i).transpose(), cap).transpose();
  return out;
}

/// Projection of non-negative values onto {s >= 0, sum s <= radius}.
inline Vector project_nonneg_l1_ball(const Vector& s, double radius) {
  Vector clipped = s.cwiseMax(0.0);
  if (clipped.sum() <= radius) return clipped;
  std::vector<double> sorted(clipped.data(), clipped.data() + clipped.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    prefix += sorted[k];
    const double candidate = (prefix - radius) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  return (clipped.array() - theta).max(0.0).matrix();
}

struct NuclearProjection {
  Matrix matrix;
  bool was_inside = false;
  double nuclear_norm = 0.0;  // of the input when computed, otherwise an upper bound
};

/// Projects M onto the nuclear ball of the given radius, skipping the SVD
/// when a cheap bound already shows M inside.
inline NuclearProjection project_nuclear_ball_detailed(const Matrix& M, double rho) {
  if (rho <= 0.0) throw std::invalid_argument("nuclear radius must be positive");
  const double bound = nuclear_norm_upper_bound(M);
  if (bound <= rho) return {M, true, bound};

  ThinSvd svd = thin_svd(M);
  const Vector& sigma = svd.sigma;
  const double nuclear = sigma.sum();
  if (nuclear <= rho) return {M, true, nuclear};

  Matrix& U = svd.U;
  Matrix& V = svd.V;
  // Sign convention: largest-magnitude entry of each left vector positive.
  for (Index c = 0; c < U.cols(); ++c) {
    Index arg = 0;
    U.col(c).cwiseAbs().maxCoeff(&arg);
    if (U(arg, c) < 0.0) {
      U.col(c) *= -1.0;
      V.col(c) *= -1.0;
    }
  }
  const Vector shrunk = project_nonneg_l1_ball(sigma, rho);
  return {U * shrunk.asDiagonal() * V.transpose(), false, nuclear};
}

inline Matrix project_nuclear_ball(const Matrix& M, double rho) {
  return project_nuclear_ball_detailed(M, rho).matrix;
}

/// Dykstra's alternating projection of Z onto the intersection of the row
/// set and the nuclear ball. The returned point is the last row-set iterate,
/// so box and row-sum constraints hold to projection accuracy; the nuclear
/// constraint holds up to Dykstra convergence.
inline Matrix project_feasible(const Matrix& Z, double cap, double rho, int max_iters) {
  Matrix y = project_rows(Z, cap);
  NuclearProjection first = project_nuclear_ball_detailed(y, rho);
  if (first.was_inside) return y;

  Matrix x = std::move(first.matrix);
  Matrix p = Z - y;
  Matrix q = y - x;
  for (int it = 1; it < max_iters; ++it) {
    Matrix y_next = project_rows(x + p, cap);
    p = x + p - y_next;
    NuclearProjection nuc = project_nuclear_ball_detailed(y_next + q, rho);
    q = y_next + q - nuc.matrix;
    const double move = (y_next - y).norm();
    y = std::move(y_next);
    x = std::move(nuc.matrix);
    if (move <= 1e-12 * (1.0 + y.norm()) && (x - y).norm() <= 1e-10 * (1.0 + y.norm())) break;
  }
  return y;
}

// ---------------------------------------------------------------------------
// Oracle

/// Per row, ones on the `cap` largest strictly positive entries (ties toward
/// the smaller index). Exact maximizer when the nuclear constraint is slack.
inline Matrix greedy_row_oracle(const Matrix& values, Index cap) {
  Matrix out = Matrix::Zero(values.rows(), values.cols());
  for (Index i = 0; i < values.rows(); ++i) {
    const Vector row = values.row(i).transpose();
    for (Index j : top_indices(row, cap))
      if (row[j] > 0.0) out(i, j) = 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Solver

enum class SolveStatus { kConverged, kNotConverged };

struct SolveReport {
  SolveStatus status = SolveStatus::kNotConverged;
  int iterations = 0;
  double objective = 0.0;
  FeasibilityResiduals residuals;
  double nuclear_norm = 0.0;
  double step0 = 0.0;
  double wall_seconds = 0.0;
  std::vector<double> best_objective_trace;  // entry 0 is the starting point

  bool converged() const { return status == SolveStatus::kConverged; }
};

struct SolveResult {
  QuantileMatrix matrix;
  SolveReport report;
};

/// Projected ascent on <A, M> over the feasible set with cap = beta_m and
/// radius rho. Returns the best feasible iterate; the report's status says
/// whether the relative-improvement stop rule fired before max_iters.
inline SolveResult solve_recover_M(const Matrix& A, Index cap, double rho,
                                   const SolverSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  const Index n = A.rows();
  const Index m = A.cols();
  SolveResult result;
  SolveReport& report = result.report;

  const double fill = static_cast<double>(cap) / static_cast<double>(m);
  Matrix M = Matrix::Constant(n, m, std::min(1.0, fill));
  if (fill * std::sqrt(static_cast<double>(n) * static_cast<double>(m)) > rho) M.setZero();

  Matrix best = M;
  double best_obj = (A.array() * M.array()).sum();
  report.best_objective_trace.push_back(best_obj);

  const double a_norm = operator_norm(A);
  if (a_norm == 0.0) {
    report.status = SolveStatus::kConverged;
  } else {
    const double eta0 = settings.step0 > 0.0 ? settings.step0 : settings.step_gain / a_norm;
    report.step0 = eta0;
    const auto window = static_cast<std::size_t>(settings.stop_window);
    for (int t = 1; t <= settings.max_iters; ++t) {
      const double eta = eta0 / std::sqrt(static_cast<double>(t));
      M = project_feasible(M + eta * A, static_cast<double>(cap), rho, settings.dykstra_iters);
      report.iterations = t;
      const double obj = (A.array() * M.array()).sum();
      if (obj > best_obj && box_residual(M) <= kTolFeas && row_sum_residual(M, cap) <= kTolFeas) {
        const double bound = nuclear_norm_upper_bound(M);
        const double nuclear = bound <= rho ? bound : nuclear_norm(M);
        if (nuclear_residual(nuclear, rho) <= kTolNuc) {
          best = M;
          best_obj = obj;
        }
      }
      report.best_objective_trace.push_back(best_obj);
      const auto& trace = report.best_objective_trace;
      if (trace.size() > window &&
          trace.back() - trace[trace.size() - 1 - window] <= settings.stop_rel_obj * std::abs(trace.back())) {
        report.status = SolveStatus::kConverged;
        break;
      }
    }
  }

  report.objective = best_obj;
  report.nuclear_norm = nuclear_norm(best);
  report.residuals = {box_residual(best), row_sum_residual(best, cap),
                      nuclear_residual(report.nuclear_norm, rho)};
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.matrix = std::move(best);
  return result;
}

inline SolveResult solve_recover_M(const ObservedRatings& ratings, const ValidatedConfig& cfg) {
  return solve_recover_M(ratings.values, cfg.beta_m(), cfg.effective_rho(), cfg.solver());
}

}  // namespace qcrowd
