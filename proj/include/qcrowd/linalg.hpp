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

#include <algorithm>
#include <cmath>

namespace qcrowd {

/// Largest singular value by block power iteration on M^T M from a fixed
/// start block, with a Rayleigh-Ritz step per sweep. A block of eight
/// vectors converges at rate (sigma_9 / sigma_1)^2 instead of
/// (sigma_2 / sigma_1)^2, which matters when the top of the spectrum is flat.
/// Stops when successive estimates agree to `tol` (relative).
inline double operator_norm(const Matrix& M, int iters = 300, double tol = 1e-9) {
  const Index cols = M.cols();
  if (M.size() == 0) return 0.0;
  const Index block = std::min<Index>({8, cols, M.rows()});
  Matrix V(cols, block);
  for (Index j = 0; j < cols; ++j)
    for (Index c = 0; c < block; ++c)
      V(j, c) = 1.0 + 0.5 * std::sin(static_cast<double>((j + 1) * (c + 1)));
  V = Eigen::HouseholderQR<Matrix>(V).householderQ() * Matrix::Identity(cols, block);

  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    const Matrix W = M.transpose() * (M * V);
    const Matrix H = V.transpose() * W;
    const double top = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .maxCoeff();
    const double next = std::sqrt(std::max(0.0, top));
    if (next == 0.0 && W.norm() == 0.0) return 0.0;
    const bool done = std::abs(next - sigma) <= tol * next;
    sigma = next;
    if (done) break;
    V = Eigen::HouseholderQR<Matrix>(W).householderQ() * Matrix::Identity(cols, block);
  }
  return sigma;
}

/// Cheap upper bound on the nuclear norm: the smaller of sqrt(rank) ||M||_F
/// and the sums of row or column Euclidean norms.
inline double nuclear_norm_upper_bound(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  const double rank_cap = static_cast<double>(std::min(M.rows(), M.cols()));
  const double frob = std::sqrt(rank_cap) * M.norm();
  const double rows = M.rowwise().norm().sum();
  const double cols = M.colwise().norm().sum();
  return std::min({frob, rows, cols});
}

}  // namespace qcrowd
