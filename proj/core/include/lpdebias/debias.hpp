// Copyright 2026 The lp-debias Authors.
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

// Two-point extrapolation of penalized solutions and the first-order
// expansion x(r, b') ~ x* + r d* + M* (b' - b) used to check it.

#ifndef LPDEBIAS_DEBIAS_HPP_
#define LPDEBIAS_DEBIAS_HPP_

#include "lpdebias/lp.hpp"
#include "lpdebias/penalized.hpp"
#include "lpdebias/penalty.hpp"

namespace lpdebias {

struct DebiasedEstimate {
  Vector x_hat;  // 2 x(r/2) - x(r)
  Vector d_hat;  // (2 / r) (x(r) - x(r/2))
  double r_n = 0.0;
  PenalizedSolution coarse;  // at r_n
  PenalizedSolution fine;    // at r_n / 2, warm-started from coarse
};

// Errors from either solve are rethrown with the failing strength attached.
DebiasedEstimate debiased_estimate(const StandardFormLP& lp_n, const PenaltySpec& pen,
                                   double r_n, const SolverOptions& opts = {});

// (r1 / (r1 - r2)) x(r2) - (r2 / (r1 - r2)) x(r1). Cancels any bias linear in r.
Vector two_point_extrapolation(const Vector& x_r1, double r1, const Vector& x_r2,
                               double r2);

struct ExpansionOracle {
  Vector x_star;
  ZeroSet I0;
  Vector d_star;
  Vector sigma;  // diagonal of Sigma
  Matrix M_star;
};

// argmin <c, d> + sum_{i in I0} p(-d_i) subject to A d = 0, by damped Newton in
// null-space coordinates. Throws Unbounded or NonConvergence.
Vector oracle_d_star(const StandardFormLP& lp, const PenaltySpec& pen, const ZeroSet& I0);
// Computes x* and I0 with the simplex first.
Vector oracle_d_star(const StandardFormLP& lp, const PenaltySpec& pen);

// Sigma_ii = p''(-d_i) on I0 and 0 elsewhere.
Vector sigma_diagonal(const PenaltySpec& pen, const Vector& d_star, const ZeroSet& I0);

// Column j minimizes x^T Sigma x subject to A x = e_j. Throws SingularKkt when
// Z^T Sigma Z is singular.
Matrix oracle_M_star(const Matrix& a, const Vector& sigma);

ExpansionOracle build_oracle(const StandardFormLP& lp, const PenaltySpec& pen,
                             double tol = kFeasibilityTol);

// x(r, b') - x* - r d* - M* (b' - b).
Vector expansion_residual(const StandardFormLP& lp, const PenaltySpec& pen, double r,
                          const Vector& b_prime, const ExpansionOracle& oracle,
                          const SolverOptions& opts = {});

}  // namespace lpdebias

#endif  // LPDEBIAS_DEBIAS_HPP_
