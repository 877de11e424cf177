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

// Solver for the penalized program
//
//   minimize <c, x> + r * sum_i p(-x_i / r)  subject to  A x = b,
//
// and its concave dual  g(lambda) = <b, lambda> - r * sum_i q(c_i - (A^T lambda)_i).
// The primal point is recovered from the dual as x = -r q'(eta) with
// eta = c - A^T lambda.

#ifndef LPDEBIAS_PENALIZED_HPP_
#define LPDEBIAS_PENALIZED_HPP_

#include <optional>
#include <string_view>
#include <vector>

#include "lpdebias/lp.hpp"
#include "lpdebias/penalty.hpp"

namespace lpdebias {

enum class SolverMethod {
  kAuto,        // kDual for barrier-type penalties, kPrimalDual otherwise
  kDual,        // Newton ascent on g over lambda
  kPrimalDual,  // equality-constrained Newton on (x, lambda)
};

std::string_view to_string(SolverMethod method);

struct SolverOptions {
  double tol = 1e-10;
  Index max_iter = 200;  // Newton steps per continuation stage
  double fraction_to_boundary = 0.95;
  std::optional<Vector> warm_start;    // lambda_0
  std::optional<Vector> warm_start_x;  // x_0, used by kPrimalDual
  // Dual-feasible lambda for cold solves, replacing dual_feasible_start().
  std::optional<Vector> dual_start;
  SolverMethod method = SolverMethod::kAuto;
  // Cold solves first solve at a large r and shrink it tenfold per stage.
  bool continuation = true;
  bool record_trace = false;
};

struct PenalizedSolution {
  Vector x;
  Vector lambda;
  Vector eta;  // c - A^T lambda for kDual, p'(-x / r) for kPrimalDual
  double r = 0.0;
  Index iterations = 0;
  double primal_residual = 0.0;  // ||A x - b||_inf
  double dual_residual = 0.0;    // ||eta - (c - A^T lambda)||_inf
  double newton_decrement = 0.0;
  SolverMethod method = SolverMethod::kDual;
  std::vector<double> dual_trace;  // g(lambda_k) of the final stage
};

// Throws DualInfeasibleStart, Diverged (iteration limit or |x| > 1e12),
// DomainViolation, or InvalidInput for r <= 0 and bad options.
PenalizedSolution solve_penalized(const StandardFormLP& lp, const PenaltySpec& pen,
                                  double r, const SolverOptions& opts = {});

// Strictly dual-feasible lambda_0 with c - A^T lambda_0 > 0. Returns 0 for
// full-domain penalties and when min c > 0.
Vector dual_feasible_start(const StandardFormLP& lp, const PenaltySpec& pen);

// Warm-started continuation over a strictly decreasing list of r.
std::vector<PenalizedSolution> solve_path(const StandardFormLP& lp,
                                          const PenaltySpec& pen,
                                          const std::vector<double>& r_list,
                                          const SolverOptions& opts = {});

// f_r(x). Returns +inf outside dom p.
double penalized_objective(const StandardFormLP& lp, const PenaltySpec& pen,
                           double r, const Vector& x);

// g(lambda). Full-domain penalties clamp c - A^T lambda at 0 from below.
double dual_objective(const StandardFormLP& lp, const PenaltySpec& pen, double r,
                      const Vector& lambda);

// f_r(x) - g(lambda).
double duality_gap(const StandardFormLP& lp, const PenaltySpec& pen, double r,
                   const PenalizedSolution& sol);

}  // namespace lpdebias

#endif  // LPDEBIAS_PENALIZED_HPP_
