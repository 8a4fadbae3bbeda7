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

// Slow reference implementations used only by the tests. None of them call
// into the library; they are brute force or textbook closed forms.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Projection onto {x in [0,1]^m, sum x <= cap} by enumerating all 3^m
/// assignments of each coordinate to {at 0, at 1, free}. For each pattern the
/// free coordinates share one shift (zero when the sum constraint is slack);
/// the nearest feasible candidate is the projection.
inline VectorXd capped_simplex_projection(const VectorXd& v, double cap) {
  const int m = static_cast<int>(v.size());
  int patterns = 1;
  for (int j = 0; j < m; ++j) patterns *= 3;
  VectorXd best;
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<int> code(static_cast<std::size_t>(m));
  for (int p = 0; p < patterns; ++p) {
    int rest = p;
    double fixed = 0.0, free_sum = 0.0;
    int free_count = 0;
    for (int j = 0; j < m; ++j) {
      code[static_cast<std::size_t>(j)] = rest % 3;
      rest /= 3;
      if (code[static_cast<std::size_t>(j)] == 1) fixed += 1.0;
      if (code[static_cast<std::size_t>(j)] == 2) {
        free_sum += v[j];
        ++free_count;
      }
    }
    std::vector<double> shifts = {0.0};
    if (free_count > 0) shifts.push_back((free_sum + fixed - cap) / free_count);
    for (double theta : shifts) {
      VectorXd x(m);
      for (int j = 0; j < m; ++j) {
        const int c = code[static_cast<std::size_t>(j)];
        x[j] = c == 0 ? 0.0 : c == 1 ? 1.0 : v[j] - theta;
      }
      if (x.minCoeff() < -1e-12 || x.maxCoeff() > 1.0 + 1e-12 || x.sum() > cap + 1e-9) continue;
      const double d = (x - v).squaredNorm();
      if (d < best_dist) {
        best_dist = d;
        best = x;
      }
    }
  }
  return best;
}

/// Nuclear-ball projection through a Jacobi SVD and a bisection for the
/// soft threshold on the singular values.
inline MatrixXd nuclear_ball_projection(const MatrixXd& M, double rho) {
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  VectorXd s = svd.singularValues();
  if (s.sum() <= rho) return M;
  double lo = 0.0, hi = s.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((s.array() - mid).max(0.0).sum() > rho) lo = mid;
    else hi = mid;
  }
  const VectorXd shrunk = (s.array() - hi).max(0.0).matrix();
  return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

inline double nuclear_norm(const MatrixXd& M) {
  return Eigen::JacobiSVD<MatrixXd>(M).singularValues().sum();
}

/// max <a, x> over binary x with at most cap ones, by enumerating subsets.
inline double best_row_value(const VectorXd& a, int cap) {
  const int m = static_cast<int>(a.size());
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    if (__builtin_popcount(mask) > cap) continue;
    double v = 0.0;
    for (int j = 0; j < m; ++j)
      if (mask & (1u << j)) v += a[j];
    best = std::max(best, v);
  }
  return best;
}

/// Exact E[T] of systematic rounding with u ~ U[0,1): integrates the
/// rounding rule piecewise between the breakpoints frac(prefix sums).
inline VectorXd systematic_marginals(const VectorXd& t0) {
  const int m = static_cast<int>(t0.size());
  std::vector<double> cuts = {0.0, 1.0};
  double prefix = 0.0;
  for (int j = 0; j < m; ++j) {
    prefix += t0[j];
    cuts.push_back(prefix - std::floor(prefix));
  }
  std::sort(cuts.begin(), cuts.end());
  VectorXd mean = VectorXd::Zero(m);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double width = cuts[c + 1] - cuts[c];
    if (width <= 0.0) continue;
    const double u = 0.5 * (cuts[c] + cuts[c + 1]);
    // Item j is chosen when a point u + t lands in [S_{j-1}, S_j).
    double lo = 0.0;
    for (int j = 0; j < m; ++j) {
      const double hi = lo + t0[j];
      const double first = std::ceil(lo - u);  // smallest t with u + t >= lo
      if (u + first < hi) mean[j] += width;
      lo = hi;
    }
  }
  return mean;
}

/// P[Binomial(n, p) > k].
inline double binomial_upper_tail(int n, double p, int k) {
  double tail = 0.0;
  for (int x = k + 1; x <= n; ++x) {
    const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0) +
                           x * std::log(p) + (n - x) * std::log1p(-p);
    tail += std::exp(log_pmf);
  }
  return tail;
}

/// max over subsets V with |V| >= v of |mean_{i in V} D_i|, by enumeration.
inline double max_set_deviation(const VectorXd& D, int v) {
  const int n = static_cast<int>(D.size());
  double worst = 0.0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const int size = __builtin_popcount(mask);
    if (size < v) continue;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) sum += D[i];
    worst = std::max(worst, std::abs(sum) / size);
  }
  return worst;
}

/// Largest singular value through a full Jacobi SVD.
inline double spectral_norm(const MatrixXd& M) {
  return Eigen::JacobiSVD<MatrixXd>(M).singularValues()(0);
}

}  // namespace oracle
