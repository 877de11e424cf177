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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lpdebias/error.hpp"
#include "lpdebias/lp.hpp"
#include "lpdebias/rng.hpp"
#include "lpdebias/transport.hpp"

namespace lpdebias {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index j = 0;
  for (double x : v) out(j++) = x;
  return out;
}

Matrix random_cost(Index p, Index q, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix c(p, q);
  for (Index i = 0; i < c.size(); ++i) c.data()[i] = u(rng);
  return c;
}

TEST(OtToLp, Construction) {
  const Vector t = vec({0.3, 0.7});
  const Vector s = vec({0.6, 0.4});
  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  const StandardFormLP lp = ot_to_lp({t, s, cost});
  Matrix expect(3, 4);
  expect << 1, 1, 0, 0,
            0, 0, 1, 1,
            1, 0, 1, 0;
  EXPECT_EQ(lp.A(), expect);
  EXPECT_EQ(lp.b(), vec({0.3, 0.7, 0.6}));
  EXPECT_EQ(lp.c(), flatten(cost));
  const Vector product = flatten(t * s.transpose());
  EXPECT_LE((lp.A() * product - lp.b()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(OtToLp, RankIsTwoPMinusOne) {
  Rng rng = make_stream(1001, 0);
  for (Index p = 2; p <= 10; ++p) {
    const StandardFormLP lp =
        ot_to_lp({flat_dirichlet(p, rng), flat_dirichlet(p, rng), random_cost(p, p, rng)});
    EXPECT_EQ(lp.rows(), 2 * p - 1);
    EXPECT_EQ(numerical_rank(lp.A()), 2 * p - 1);
  }
}

TEST(OtToLp, ValidationErrors) {
  Matrix cost = Matrix::Zero(2, 2);
  EXPECT_THROW(validate(OtProblem{vec({0.5, 0.6}), vec({0.5, 0.5}), cost}), Error);
  EXPECT_THROW(validate(OtProblem{vec({0.5, 0.5}), vec({0.5, 0.5}), Matrix::Zero(2, 3)}), Error);
  cost(0, 1) = NAN;
  EXPECT_THROW(validate(OtProblem{vec({0.5, 0.5}), vec({0.5, 0.5}), cost}), Error);
}

TEST(OtToLp, EqualMarginalsGiveDiagonalPlan) {
  Rng rng = make_stream(1002, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector t = flat_dirichlet(4, rng);
    Matrix cost = random_cost(4, 4, rng).array() + 0.1;
    cost.diagonal().setZero();
    const LpSolution sol = solve_lp(ot_to_lp({t, t, cost}));
    EXPECT_LE((unflatten(sol.x, 4, 4) - Matrix(t.asDiagonal())).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(GridCost, Geometry) {
  const Matrix c2 = grid_cost(2);
  EXPECT_NEAR(c2(0, 3), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(c2.diagonal(), Vector::Zero(4));
  const Matrix c5 = grid_cost(5);
  EXPECT_EQ(c5, c5.transpose());
  EXPECT_NEAR(grid_cost(3, 2.0)(0, 8), 2.0, 1e-15);
}

TEST(SupportRestriction, RoundTrip) {
  const Vector t = vec({0.5, 0.0, 0.5});
  const Vector s = vec({0.0, 1.0});
  Matrix cost(3, 2);
  cost << 1, 2, 3, 4, 5, 6;
  const SupportRestriction sr = restrict_support({t, s, cost});
  EXPECT_EQ(sr.rows, (std::vector<Index>{0, 2}));
  EXPECT_EQ(sr.cols, (std::vector<Index>{1}));
  EXPECT_EQ(sr.restricted.cost, (Matrix(2, 1) << 2, 6).finished());
  const Vector full = embed_plan(sr, vec({0.5, 0.5}), 3, 2);
  EXPECT_EQ(full, vec({0, 0.5, 0, 0, 0, 0.5}));
}

TEST(Sinkhorn, LargeStrengthGivesProductCoupling) {
  Rng rng = make_stream(1003, 0);
  const Vector t = flat_dirichlet(4, rng);
  const Vector s = flat_dirichlet(3, rng);
  const EntropicPlan plan = sinkhorn({t, s, random_cost(4, 3, rng)}, 1e6);
  EXPECT_LE((plan.plan - t * s.transpose()).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Sinkhorn, SymmetricClosedForm) {
  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  const Vector half = Vector::Constant(2, 0.5);
  for (double lambda : {0.05, 0.2, 1.0, 5.0}) {
    const EntropicPlan plan = sinkhorn({half, half, cost}, lambda);
    const double e = std::exp(-1.0 / lambda);
    EXPECT_NEAR(plan.plan(0, 1), 0.5 * e / (1.0 + e), 1e-12) << "lambda = " << lambda;
    EXPECT_NEAR(plan.plan(0, 1), plan.plan(1, 0), 1e-12);
  }
}

TEST(Sinkhorn, MarginalsAndSymmetry) {
  Rng rng = make_stream(1004, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector t = flat_dirichlet(10, rng);
    const Vector s = flat_dirichlet(10, rng);
    const EntropicPlan plan = sinkhorn({t, s, random_cost(10, 10, rng)}, 0.1);
    EXPECT_LE((plan.plan.rowwise().sum() - t).cwiseAbs().sum(), 1e-10);
    EXPECT_LE((plan.plan.colwise().sum().transpose() - s).cwiseAbs().sum(), 1e-10);
    Matrix sym = random_cost(10, 10, rng);
    sym = (sym + sym.transpose()).eval();
    const EntropicPlan even = sinkhorn({t, t, sym}, 0.1);
    EXPECT_LE((even.plan - even.plan.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Sinkhorn, ZeroMassAtomsStayEmpty) {
  const Vector t = vec({0.5, 0.0, 0.5});
  const Vector s = vec({0.25, 0.75});
  const EntropicPlan plan = sinkhorn({t, s, Matrix::Ones(3, 2)}, 0.5);
  EXPECT_EQ(plan.plan.row(1).sum(), 0.0);
  EXPECT_NEAR(plan.plan.sum(), 1.0, 1e-12);
}

TEST(EntropicBiasProfile, ApproachesUnitSlope) {
  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  const Vector half = Vector::Constant(2, 0.5);
  const auto rows = entropic_bias_profile({half, half, cost}, {0.5, 0.2, 0.1, 0.05, 0.02});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(std::abs(rows[i].scaled - 1.0), std::abs(rows[i - 1].scaled - 1.0));
  }
  EXPECT_NEAR(rows.back().scaled, 1.0, 0.02);
  const auto huge = entropic_bias_profile({half, half, cost}, {1e6});
  EXPECT_NEAR(huge[0].error, 0.25, 1e-5);
}

TEST(EntropicBiasProfile, FixedStrengthBiasPersists) {
  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  const Vector half = Vector::Constant(2, 0.5);
  Matrix pi_star(2, 2);
  pi_star << 0.5, 0, 0, 0.5;
  const double population = (sinkhorn({half, half, cost}, 1.0).plan - pi_star).cwiseAbs().maxCoeff();
  Rng rng = make_stream(1005, 0);
  for (std::int64_t n : {1000, 100000}) {
    const Vector t = multinomial_counts(n, half, rng) / double(n);
    const Vector s = multinomial_counts(n, half, rng) / double(n);
    const double err = (sinkhorn({t, s, cost}, 1.0).plan - pi_star).cwiseAbs().maxCoeff();
    EXPECT_GE(err, 0.5 * population);
  }
}

TEST(Colocalization, Examples) {
  Rng rng = make_stream(1006, 0);
  const Vector t = flat_dirichlet(4, rng);
  const Vector s = flat_dirichlet(4, rng);
  Matrix cost = random_cost(4, 4, rng);
  const Matrix plan = unflatten(solve_lp(ot_to_lp({t, s, cost})).x, 4, 4);
  const Vector xi = vec({-0.5, 0.0, 0.3, cost.maxCoeff()});
  const ColocCurve curve = colocalization(plan, cost, xi);
  EXPECT_EQ(curve.values(0), 0.0);
  EXPECT_NEAR(curve.values(3), 1.0, 1e-12);
  for (Index g = 1; g < xi.size(); ++g) EXPECT_GE(curve.values(g), curve.values(g - 1));

  cost.diagonal().setZero();
  const ColocCurve self = colocalization(Matrix(t.asDiagonal()), cost, vec({0.0, 0.1, 1.0}));
  EXPECT_NEAR((self.values.array() - 1.0).abs().maxCoeff(), 0.0, 1e-15);
}

TEST(Colocalization, Linear) {
  Rng rng = make_stream(1007, 0);
  const Matrix cost = random_cost(3, 3, rng);
  const Matrix p = random_cost(3, 3, rng);
  const Matrix q = random_cost(3, 3, rng);
  const Vector xi = vec({0.1, 0.4, 0.8});
  const Vector lhs = colocalization(0.3 * p + 1.7 * q, cost, xi).values;
  const Vector rhs = 0.3 * colocalization(p, cost, xi).values + 1.7 * colocalization(q, cost, xi).values;
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Rebalance, Construction) {
  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  const StandardFormLP lp = rebalance_to_lp({vec({3, -3}), cost});
  EXPECT_EQ(lp.A(), (Matrix(1, 2) << 1, -1).finished());
  EXPECT_EQ(lp.b(), vec({3}));
  try {
    rebalance_to_lp({vec({3, -2}), cost});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnbalancedDemand);
  }
}

TEST(Rebalance, OptimalFlows) {
  Matrix unit = Matrix::Ones(3, 3);
  unit.diagonal().setZero();
  const LpSolution zero = solve_lp(rebalance_to_lp({Vector::Zero(3), unit}));
  EXPECT_NEAR(zero.objective, 0.0, 1e-12);
  EXPECT_NEAR(zero.x.cwiseAbs().maxCoeff(), 0.0, 1e-12);
  const LpSolution split = solve_lp(rebalance_to_lp({vec({2, -1, -1}), unit}));
  EXPECT_NEAR(split.objective, 2.0, 1e-12);
  const Matrix flow = flow_to_matrix(split.x, 3);
  EXPECT_NEAR(flow(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(flow(0, 2), 1.0, 1e-12);
  EXPECT_EQ(flow.diagonal(), Vector::Zero(3));
}

TEST(Estimators, OtEstimatorHandlesEmptyAtoms) {
  Matrix cost(3, 3);
  cost << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  const Estimator est = make_ot_estimator(cost, make_penalty(PenaltyKind::kLogBarrier), 0.01);
  Vector ts(6);
  ts << 0.4, 0.0, 0.6, 0.5, 0.5, 0.0;
  const Matrix plan = unflatten(est(ts), 3, 3);
  EXPECT_EQ(plan.row(1).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(plan.col(2).cwiseAbs().sum(), 0.0);
  EXPECT_NEAR(plan.sum(), 1.0, 1e-9);
  const Matrix exact = unflatten(solve_lp(ot_to_lp({ts.head(3), ts.tail(3), cost})).x, 3, 3);
  EXPECT_LE((plan - exact).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Estimators, LpEstimatorMatchesDebiasedSolve) {
  Matrix cost(2, 2);
  cost << 0, 1, 2, 0;
  const Vector half = Vector::Constant(2, 0.5);
  const StandardFormLP lp = ot_to_lp({half, half, cost});
  const Estimator est = make_lp_estimator(lp, make_penalty(PenaltyKind::kExponential), 0.05);
  const Vector b = ot_rhs(vec({0.55, 0.45}), vec({0.5, 0.5}));
  const Vector x = est(b);
  EXPECT_LE((lp.A() * x - b).cwiseAbs().maxCoeff(), 1e-9);
  const Vector via_ot = make_ot_estimator(cost, make_penalty(PenaltyKind::kExponential), 0.05)(
      vec({0.55, 0.45, 0.5, 0.5}));
  EXPECT_LE((x - via_ot).cwiseAbs().maxCoeff(), 1e-8);
}

}  // namespace
}  // namespace lpdebias
