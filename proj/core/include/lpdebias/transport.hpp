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

// Discrete optimal transport, entropic transport, colocalization curves and
// the station rebalancing flow program. Plans are flattened row-major.

#ifndef LPDEBIAS_TRANSPORT_HPP_
#define LPDEBIAS_TRANSPORT_HPP_

#include <vector>

#include "lpdebias/inference.hpp"
#include "lpdebias/lp.hpp"
#include "lpdebias/penalized.hpp"
#include "lpdebias/penalty.hpp"

namespace lpdebias {

// Source t (length p), target s (length q), cost p x q.
struct OtProblem {
  Vector t;
  Vector s;
  Matrix cost;
};

// Throws InvalidInput unless both marginals lie on the simplex within 1e-12
// and the cost is finite with matching shape.
void validate(const OtProblem& prob);

// Row sums equal t, column sums equal s; the last column constraint is
// dropped so A has p + q - 1 rows.
StandardFormLP ot_to_lp(const OtProblem& prob);
Vector ot_rhs(const Vector& t, const Vector& s);
Matrix unflatten(const Vector& x, Index p, Index q);
Vector flatten(const Matrix& plan);

// Cost |v_a - v_b|^exponent between the points of an L x L grid on [0,1]^2,
// indexed a = i L + j.
Matrix grid_cost(Index L, double exponent = 1.0);

// Rows and columns with positive mass and the OT problem restricted to them.
struct SupportRestriction {
  std::vector<Index> rows;
  std::vector<Index> cols;
  OtProblem restricted;
};

SupportRestriction restrict_support(const OtProblem& prob);
// Embeds a flattened restricted plan into the full p x q plan (flattened).
Vector embed_plan(const SupportRestriction& sr, const Vector& restricted_flat, Index p,
                  Index q);

struct EntropicPlan {
  Matrix plan;
  double lambda = 0.0;
  Index iterations = 0;
  double marginal_residual = 0.0;  // l1 error of both marginals
};

// Log-domain Sinkhorn for min <c, pi> + lambda sum pi (log pi - 1). Zero-mass
// atoms are removed and re-embedded with zero mass. Throws NonConvergence.
EntropicPlan sinkhorn(const OtProblem& prob, double lambda, double tol = 1e-12,
                      Index max_iter = 1000000);

struct BiasProfileRow {
  double lambda;
  double error;   // ||pi_lambda - pi*||_inf
  double scaled;  // lambda log(1 / error)
};

std::vector<BiasProfileRow> entropic_bias_profile(const OtProblem& prob,
                                                  const std::vector<double>& lambdas);

struct ColocCurve {
  Vector xi;
  Vector values;
};

// Col(xi) = sum_ij plan_ij 1{cost_ij <= xi}. xi_grid must be sorted.
ColocCurve colocalization(const Matrix& plan, const Matrix& cost, const Vector& xi_grid);

// Net demand d (sums to 0) and an N x N cost with zero diagonal.
struct FlowProblem {
  Vector d;
  Matrix cost;
};

// Variables pi_ij for i != j in row-major order; rows sum_j (pi_ij - pi_ji) = d_i
// for i < N - 1. Throws UnbalancedDemand when |sum d| > tol.
StandardFormLP rebalance_to_lp(const FlowProblem& prob, double tol = 1e-9);
Vector flow_rhs(const Vector& d);
// N x N flow matrix from the N (N - 1) variables.
Matrix flow_to_matrix(const Vector& x, Index N);

// (t, s) -> flattened debiased p x q plan, solving on the support of the
// empirical marginals.
Estimator make_ot_estimator(const Matrix& cost, const PenaltySpec& pen, double r_n,
                            const SolverOptions& opts = {});

// b -> debiased solution of the LP with A and c fixed.
Estimator make_lp_estimator(const StandardFormLP& lp, const PenaltySpec& pen, double r_n,
                            const SolverOptions& opts = {});

}  // namespace lpdebias

#endif  // LPDEBIAS_TRANSPORT_HPP_
