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

// Thin SVD through LAPACK. Eigen 3.4.0's BDCSVD indexes out of range in its
// deflation step on matrices with many repeated singular values (binary
// rating matrices hit this), so it is not used.

#pragma once

#include <Eigen/Dense>
#include <lapacke.h>

#include <algorithm>
#include <stdexcept>
#include <string>

namespace qcrowd {

class SvdFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ThinSvd {
  Eigen::MatrixXd U;      // rows x r
  Eigen::VectorXd sigma;  // r, descending
  Eigen::MatrixXd V;      // cols x r
};

namespace detail {

// dgesdd, then dgesvd if divide and conquer fails to converge.
inline void lapack_svd(Eigen::MatrixXd A, char job, Eigen::VectorXd& sigma, Eigen::MatrixXd* U,
                       Eigen::MatrixXd* VT) {
  const auto rows = static_cast<lapack_int>(A.rows());
  const auto cols = static_cast<lapack_int>(A.cols());
  const lapack_int r = std::min(rows, cols);
  sigma.resize(r);
  if (r == 0) return;
  double* u = nullptr;
  double* vt = nullptr;
  if (job == 'S') {
    U->resize(rows, r);
    VT->resize(r, cols);
    u = U->data();
    vt = VT->data();
  }
  const Eigen::MatrixXd copy = A;
  lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, job, rows, cols, A.data(), rows, sigma.data(), u,
                                   rows, vt, r);
  if (info > 0) {
    A = copy;
    Eigen::VectorXd superb(std::max<lapack_int>(r - 1, 1));
    info = LAPACKE_dgesvd(LAPACK_COL_MAJOR, job, job, rows, cols, A.data(), rows, sigma.data(), u, rows,
                          vt, r, superb.data());
  }
  if (info != 0) throw SvdFailure("SVD did not converge (LAPACK info " + std::to_string(info) + ")");
}

}  // namespace detail

inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& M) {
  Eigen::VectorXd sigma;
  detail::lapack_svd(M, 'N', sigma, nullptr, nullptr);
  return sigma;
}

inline ThinSvd thin_svd(const Eigen::MatrixXd& M) {
  ThinSvd out;
  Eigen::MatrixXd VT;
  detail::lapack_svd(M, 'S', out.sigma, &out.U, &VT);
  out.V = VT.transpose();
  return out;
}

}  // namespace qcrowd
