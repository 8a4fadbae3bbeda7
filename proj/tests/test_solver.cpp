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

#include "qcrowd/solver.hpp"
#include "qcrowd/random.hpp"

#include <catch_amalgamated.hpp>

#include "oracles.hpp"

#include <cmath>

using namespace qcrowd;

namespace {

Vector random_vector(Index m, double lo, double hi, RandomSource& rng) {
  Vector v(m);
  for (Index j = 0; j < m; ++j) v[j] = lo + (hi - lo) * rng.uniform();
  return v;
}

Matrix random_matrix(Index r, Index c, double lo, double hi, RandomSource& rng) {
  Matrix M(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) M(i, j) = lo + (hi - lo) * rng.uniform();
  return M;
}

double objective(const Matrix& A, const Matrix& M) { return (A.array() * M.array()).sum(); }

}  // namespace

TEST_CASE("capped box-simplex projection examples") {
  Vector v(2);
  v << 2.0, 2.0;
  Vector x = project_capped_box_simplex(v, 1.0);
  CHECK(x[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(x[1] == Catch::Approx(0.5).margin(1e-12));

  Vector inside(3);
  inside << 0.2, 1.0, 0.0;
  CHECK(project_capped_box_simplex(inside, 2.0) == inside);

  v << 0.3, -0.4;  // already inside after clipping
  x = project_capped_box_simplex(v, 1.0);
  CHECK(x[0] == 0.3);
  CHECK(x[1] == 0.0);

  Vector w(3);
  w << 3.0, 0.9, 0.2;  // cap 2: first coordinate saturates, the rest share the shift
  x = project_capped_box_simplex(w, 2.0);
  CHECK(x[0] == 1.0);
  CHECK(x[1] == Catch::Approx(0.85).margin(1e-12));
  CHECK(x[2] == Catch::Approx(0.15).margin(1e-12));
}

TEST_CASE("capped box-simplex projection matches active-set enumeration") {
  auto rng = derive_rng(21, "projection");
  for (int t = 0; t < 200; ++t) {
    const Index m = 1 + static_cast<Index>(rng.below(8));
    const Vector v = random_vector(m, -1.0, 2.0, rng);
    const double cap = 0.5 + rng.uniform() * static_cast<double>(m);
    const Vector x = project_capped_box_simplex(v, cap);
    const Vector ref = oracle::capped_simplex_projection(v, cap);
    CHECK((x - ref).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("nonnegative l1 ball projection") {
  Vector s(3);
  s << 3.0, 1.0, 0.5;
  const Vector p = project_nonneg_l1_ball(s, 2.0);
  CHECK(p[0] == Catch::Approx(2.0));
  CHECK(p[1] == Catch::Approx(0.0).margin(1e-15));
  CHECK(p[2] == Catch::Approx(0.0).margin(1e-15));
  const Vector q = project_nonneg_l1_ball(s, 4.0);  // threshold 1/6
  CHECK(q[0] == Catch::Approx(17.0 / 6.0));
  CHECK(q[1] == Catch::Approx(5.0 / 6.0));
  CHECK(q[2] == Catch::Approx(1.0 / 3.0));
  CHECK(project_nonneg_l1_ball(s, 10.0) == s);
}

TEST_CASE("rank-one nuclear projection rescales") {
  const Matrix M = 2.0 * Vector::Ones(3) * Vector::Ones(4).transpose();  // sigma = 2 sqrt(12)
  const NuclearProjection p = project_nuclear_ball_detailed(M, std::sqrt(12.0));
  CHECK_FALSE(p.was_inside);
  CHECK((p.matrix - 0.5 * M).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(project_nuclear_ball_detailed(M, 100.0).was_inside);
}

TEST_CASE("nuclear projection lands on the sphere at half the norm") {
  auto rng = derive_rng(20, "nuclear");
  for (int t = 0; t < 10; ++t) {
    const Matrix M = random_matrix(6, 9, -1.0, 1.0, rng);
    const double rho = 0.5 * oracle::nuclear_norm(M);
    CHECK(std::abs(oracle::nuclear_norm(project_nuclear_ball(M, rho)) - rho) < 1e-8);
  }
  const Matrix small = 0.1 * Matrix::Identity(3, 3);
  CHECK(project_nuclear_ball(small, 1.0) == small);
  CHECK_THROWS(project_nuclear_ball(small, 0.0));
}

TEST_CASE("nuclear projection matches the singular-value oracle") {
  auto rng = derive_rng(22, "nuclear");
  for (int t = 0; t < 60; ++t) {
    const Index r = 1 + static_cast<Index>(rng.below(8));
    const Index c = 1 + static_cast<Index>(rng.below(12));
    const Matrix M = random_matrix(r, c, -1.0, 1.0, rng);
    const double rho = (0.1 + 0.8 * rng.uniform()) * oracle::nuclear_norm(M);
    const Matrix P = project_nuclear_ball(M, rho);
    CHECK((P - oracle::nuclear_ball_projection(M, rho)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(oracle::nuclear_norm(P) <= rho * (1.0 + 1e-9));
  }
}

TEST_CASE("nuclear upper bound dominates the norm") {
  auto rng = derive_rng(23, "bound");
  for (int t = 0; t < 30; ++t) {
    const Matrix M = random_matrix(5 + t % 4, 7, -1.0, 1.0, rng);
    CHECK(nuclear_norm_upper_bound(M) >= oracle::nuclear_norm(M) * (1.0 - 1e-12));
  }
}

TEST_CASE("greedy oracle examples") {
  Matrix v(1, 3);
  v << 0.9, 0.1, 0.5;
  Matrix expected(1, 3);
  expected << 1, 0, 1;
  CHECK(greedy_row_oracle(v, 2) == expected);

  v << -0.2, 0.0, 0.3;  // never picks non-positive values
  expected << 0, 0, 1;
  CHECK(greedy_row_oracle(v, 2) == expected);

  CHECK(greedy_row_oracle(Matrix::Zero(2, 3), 2) == Matrix::Zero(2, 3));
}

TEST_CASE("greedy oracle matches subset enumeration") {
  auto rng = derive_rng(24, "greedy");
  for (int t = 0; t < 50; ++t) {
    const Matrix A = random_matrix(4, 4 + t % 5, -0.5, 1.0, rng);
    const Index cap = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(A.cols())));
    const Matrix G = greedy_row_oracle(A, cap);
    for (Index i = 0; i < A.rows(); ++i) {
      CHECK(G.row(i).dot(A.row(i)) ==
            Catch::Approx(oracle::best_row_value(A.row(i).transpose(), static_cast<int>(cap))).margin(1e-12));
      CHECK(G.row(i).sum() <= static_cast<double>(cap));
    }
  }
}

TEST_CASE("feasible projection lands in the intersection") {
  auto rng = derive_rng(25, "dykstra");
  const Matrix Z = random_matrix(10, 15, -1.0, 2.0, rng);
  const double cap = 3.0;
  const Matrix rows = project_rows(Z, cap);
  const double rho = 0.5 * oracle::nuclear_norm(rows);
  const Matrix P = project_feasible(Z, cap, rho, 500);
  CHECK(box_residual(P) <= kTolFeas);
  CHECK(row_sum_residual(P, 3) <= kTolFeas);
  CHECK(nuclear_residual(oracle::nuclear_norm(P), rho) <= 1e-3);

  // Idempotent on feasible points.
  const Matrix again = project_feasible(P, cap, oracle::nuclear_norm(P) * 1.01, 500);
  CHECK((again - P).norm() < 1e-8);
}

TEST_CASE("solver equals the greedy oracle when the ball is slack") {
  auto rng = derive_rng(26, "solve");
  for (int t = 0; t < 10; ++t) {
    const Matrix A = random_matrix(20, 30, 0.0, 1.0, rng);
    const Index cap = 6;
    const double rho = 1e6;
    const SolveResult r = solve_recover_M(A, cap, rho, SolverSettings{});
    const double greedy = objective(A, greedy_row_oracle(A, cap));
    CHECK(r.report.converged());
    CHECK(std::abs(r.report.objective - greedy) <= 1e-5 * greedy);
    CHECK(r.report.residuals.ok());
  }
}

TEST_CASE("solver respects an active nuclear constraint") {
  auto rng = derive_rng(27, "solve");
  const Matrix A = random_matrix(15, 20, -0.5, 1.0, rng);
  const Index cap = 5;
  const double rho = 10.0;  // well below the greedy solution's norm
  CHECK(oracle::nuclear_norm(greedy_row_oracle(A, cap)) > rho);
  const SolveResult r = solve_recover_M(A, cap, rho, SolverSettings{});
  CHECK(r.report.residuals.ok());
  CHECK(oracle::nuclear_norm(r.matrix) <= rho * (1.0 + kTolNuc));
  CHECK(r.report.objective <= objective(A, greedy_row_oracle(A, cap)) + 1e-9);
  // The best iterate beats the uniform starting point.
  CHECK(r.report.objective >= r.report.best_objective_trace.front());
}

TEST_CASE("best objective trace is monotone") {
  auto rng = derive_rng(28, "solve");
  const Matrix A = random_matrix(12, 18, -1.0, 1.0, rng);
  const SolveResult r = solve_recover_M(A, 4, 6.0, SolverSettings{});
  const auto& trace = r.report.best_objective_trace;
  for (std::size_t t = 1; t < trace.size(); ++t) CHECK(trace[t] >= trace[t - 1]);
  CHECK(trace.back() == r.report.objective);
}

TEST_CASE("zero observations give the starting point") {
  const SolveResult r = solve_recover_M(Matrix::Zero(5, 8), 2, 100.0, SolverSettings{});
  CHECK(r.report.converged());
  CHECK(r.report.iterations == 0);
  CHECK((r.matrix.array() == 0.25).all());
  CHECK(r.report.objective == 0.0);
}

TEST_CASE("max_iters cap reports non-convergence") {
  auto rng = derive_rng(29, "solve");
  const Matrix A = random_matrix(10, 12, -1.0, 1.0, rng);
  SolverSettings s;
  s.max_iters = 3;
  const SolveResult r = solve_recover_M(A, 3, 5.0, s);
  CHECK_FALSE(r.report.converged());
  CHECK(r.report.iterations == 3);
  CHECK(r.report.residuals.ok());
}
