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

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qcrowd {

class EmptySet : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// s_i = sum_j M_ij r_j
inline Vector score_rows(const Matrix& M, const Vector& r_tilde) {
  if (M.cols() != r_tilde.size()) throw std::invalid_argument("score_rows: dimension mismatch");
  return M * r_tilde;
}

inline std::vector<Index> select_top_rows(const Vector& scores, Index count) {
  if (count > scores.size()) throw std::invalid_argument("select_top_rows: count exceeds rows");
  return top_indices(scores, count);
}

inline Vector average_rows(const Matrix& M, const std::vector<Index>& rows) {
  if (rows.empty()) throw EmptySet("average_rows: empty row set");
  Vector sum = Vector::Zero(M.cols());
  for (Index i : rows) sum += M.row(i).transpose();
  return sum / static_cast<double>(rows.size());
}

/// Systematic sampling with a given offset u in [0,1): item j is selected
/// when some u + t, t = 0, 1, ..., falls in [s_{j-1}, s_j) where s are the
/// prefix sums of T0.
inline SelectionSet systematic_round(const Vector& t0, double u) {
  SelectionSet out{Vector::Zero(t0.size())};
  // Number of points u + t below x, for t >= 0.
  auto points_below = [u](double x) { return x > u ? std::ceil(x - u) : 0.0; };
  double prefix = 0.0;
  double below = 0.0;
  for (Index j = 0; j < t0.size(); ++j) {
    prefix += t0[j];
    const double now = points_below(prefix);
    if (now > below) out.t[j] = 1.0;
    below = now;
  }
  return out;
}

/// One systematic-sampling draw; E[T] = T0 and |T| <= ceil(sum T0).
inline SelectionSet randomized_round(const Vector& t0, RandomSource& rng) {
  return systematic_round(t0, rng.uniform());
}

struct RoundingTrace {
  SelectionSet selection;
  int iterations = 0;
  int iteration_cap = 0;
  std::vector<double> inner_products;  // <T, r'> per rounding draw
  double t0_inner = 0.0;               // <T0, r'>
  double threshold = 0.0;              // (eps/4) beta k0
  bool early_accept = false;
  bool accepted = false;
};

inline int accept_iteration_cap(double epsilon, double beta, double delta) {
  return static_cast<int>(std::ceil(4.0 * std::log(1.0 / delta) / (epsilon * beta)));
}

/// Repeats randomized rounding until <T, r'> >= <T0, r'> - (eps/4) beta k0.
/// When <T0, r'> itself is below the slack the first draw is accepted. After
/// the cap the best draw seen is returned with accepted = false.
inline RoundingTrace accept_loop(const Vector& t0, const Vector& r_prime, double epsilon,
                                 double beta, double delta, Index k0, RandomSource& rng) {
  RoundingTrace trace;
  trace.threshold = epsilon / 4.0 * beta * static_cast<double>(k0);
  trace.t0_inner = t0.dot(r_prime);
  trace.iteration_cap = std::max(1, accept_iteration_cap(epsilon, beta, delta));

  if (trace.t0_inner < trace.threshold) {
    trace.selection = randomized_round(t0, rng);
    trace.inner_products.push_back(trace.selection.t.dot(r_prime));
    trace.iterations = 1;
    trace.early_accept = true;
    trace.accepted = true;
    return trace;
  }

  double best = -1.0;
  for (int it = 1; it <= trace.iteration_cap; ++it) {
    SelectionSet candidate = randomized_round(t0, rng);
    const double inner = candidate.t.dot(r_prime);
    trace.inner_products.push_back(inner);
    trace.iterations = it;
    if (inner > best) {
      best = inner;
      trace.selection = candidate;
    }
    if (inner >= trace.t0_inner - trace.threshold) {
      trace.selection = std::move(candidate);
      trace.accepted = true;
      break;
    }
  }
  return trace;
}

inline RoundingTrace accept_loop(const Vector& t0, const Vector& r_prime, const ValidatedConfig& cfg,
                                 RandomSource& rng) {
  return accept_loop(t0, r_prime, cfg.epsilon(), cfg.beta(), cfg.delta(), cfg.k0(), rng);
}

/// Clamps T0 into [0,1]^m with sum at most cap, absorbing solver round-off
/// so the rounding cardinality bound is exact.
inline Vector clamp_to_cap(Vector t0, Index cap) {
  t0 = t0.cwiseMax(0.0).cwiseMin(1.0);
  const double total = t0.sum();
  if (total > static_cast<double>(cap)) t0 *= static_cast<double>(cap) / total;
  return t0;
}

struct QuantileRecovery {
  SelectionSet selection;
  RoundingTrace trace;
  std::vector<Index> top_rows;
  Vector t0;
};

/// Scores rows by r~, averages the alpha_n best into T0 and rounds it
/// through the accept loop against r~'.
inline QuantileRecovery recover_quantile(const Matrix& M, const Vector& r_tilde,
                                         const Vector& r_tilde_prime, const ValidatedConfig& cfg,
                                         RandomSource& rng) {
  QuantileRecovery out;
  const Vector scores = score_rows(M, r_tilde);
  out.top_rows = select_top_rows(scores, cfg.alpha_n());
  out.t0 = clamp_to_cap(average_rows(M, out.top_rows), cfg.beta_m());
  out.trace = accept_loop(out.t0, r_tilde_prime, cfg, rng);
  out.selection = out.trace.selection;
  return out;
}

}  // namespace qcrowd
