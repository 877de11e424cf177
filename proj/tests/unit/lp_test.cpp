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

#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "lpdebias/error.hpp"
#include "lpdebias/lp.hpp"
#include "lpdebias/rng.hpp"
#include "lpdebias/transport.hpp"

namespace lpdebias {
namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Index>(v.size()));
  Index j = 0;
  for (double x : v) m(0, j++) = x;
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index j = 0;
  for (double x : v) out(j++) = x;
  return out;
}

StandardFormLP ot_2x2() {
  Matrix cost(2, 2);
  cost << 0, 1, 2, 0;
  return ot_to_lp({vec({0.5, 0.5}), vec({0.5, 0.5}), cost});
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no lpdebias::Error thrown";
  return ErrorCode::kInvalidInput;
}

TEST(SolveLp, TwoByTwoTransport) {
  const LpSolution sol = solve_lp(ot_2x2());
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR((sol.x - vec({0.5, 0, 0, 0.5})).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR(sol.objective, 0.0, 1e-12);
  EXPECT_EQ(sol.basis.size(), 3u);
}

TEST(SolveLp, ZeroCostAcceptsAnyFeasiblePoint) {
  const StandardFormLP lp(row({1, 1, 1}), vec({2}), Vector::Zero(3));
  const LpSolution sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_DOUBLE_EQ(sol.objective, 0.0);
  EXPECT_NEAR(sol.x.sum(), 2.0, 1e-12);
  EXPECT_GE(sol.x.minCoeff(), 0.0);
}

TEST(SolveLp, TwoStationRebalance) {
  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  const LpSolution sol = solve_lp(rebalance_to_lp({vec({3, -3}), cost}));
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.x(0), 3.0, 1e-12);
  EXPECT_NEAR(sol.x(1), 0.0, 1e-12);
  EXPECT_NEAR(sol.objective, 3.0, 1e-12);
}

TEST(SolveLp, ReportsInfeasibleAndUnbounded) {
  const StandardFormLP infeasible(row({1, 1}), vec({-1}), vec({1, 1}));
  EXPECT_EQ(solve_lp(infeasible).status, LpStatus::kInfeasible);
  const StandardFormLP unbounded(row({1, -1}), vec({0}), vec({-1, 0}));
  EXPECT_EQ(solve_lp(unbounded).status, LpStatus::kUnbounded);
}

// A textbook cycling instance for the largest-coefficient rule.
TEST(SolveLp, BlandRuleTerminatesOnCyclingInstance) {
  Matrix a(3, 7);
  a << 1, 0, 0, 0.25, -8, -1, 9,
       0, 1, 0, 0.5, -12, -0.5, 3,
       0, 0, 1, 0, 0, 1, 0;
  const Vector b = vec({0, 0, 1});
  const Vector c = vec({0, 0, 0, -0.75, 20, -0.5, 6});
  const LpSolution sol = solve_lp(StandardFormLP(a, b, c));
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.objective, -1.25, 1e-12);
}

TEST(SolveLp, ConstructionErrors) {
  EXPECT_EQ(code_of([] { StandardFormLP(row({1, 1}), vec({1, 2}), vec({0, 1})); }),
            ErrorCode::kInvalidInput);
  EXPECT_EQ(code_of([] { StandardFormLP(row({1, NAN}), vec({1}), vec({0, 1})); }),
            ErrorCode::kInvalidInput);
  Matrix dup(2, 3);
  dup << 1, 2, 3, 1, 2, 3;
  EXPECT_EQ(code_of([&] { StandardFormLP(dup, vec({1, 1}), vec({0, 0, 1})); }),
            ErrorCode::kRankDeficient);
  Matrix tall(3, 2);
  tall << 1, 0, 0, 1, 1, 1;
  EXPECT_EQ(code_of([&] { StandardFormLP(tall, vec({1, 1, 2}), vec({0, 1})); }),
            ErrorCode::kRankDeficient);
}

TEST(SolveLp, WithRhsSharesStructure) {
  const StandardFormLP lp = ot_2x2();
  const StandardFormLP other = lp.with_rhs(ot_rhs(vec({0.7, 0.3}), vec({0.4, 0.6})));
  EXPECT_EQ(&lp.A(), &other.A());
  EXPECT_EQ(code_of([&] { lp.with_rhs(vec({1})); }), ErrorCode::kInvalidInput);
}

class RandomLp : public ::testing::TestWithParam<int> {
 protected:
  // Random transport program, which is always feasible and bounded.
  StandardFormLP make(Rng& rng, Index p, Index q) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix cost(p, q);
    for (Index i = 0; i < cost.size(); ++i) cost.data()[i] = u(rng);
    return ot_to_lp({flat_dirichlet(p, rng), flat_dirichlet(q, rng), cost});
  }
};

TEST_P(RandomLp, StrongDuality) {
  Rng rng = make_stream(101, static_cast<std::uint64_t>(GetParam()));
  const StandardFormLP lp = make(rng, 2 + GetParam() % 4, 3 + GetParam() % 3);
  const LpSolution sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(lp.c().dot(sol.x), lp.b().dot(sol.dual), 1e-8);
  EXPECT_LE(sol.primal_residual, 1e-9);
  EXPECT_GE(sol.x.minCoeff(), -1e-9);
  EXPECT_GE(sol.reduced_costs.minCoeff(), -1e-9);
}

TEST_P(RandomLp, PermutationInvariance) {
  Rng rng = make_stream(202, static_cast<std::uint64_t>(GetParam()));
  const StandardFormLP lp = make(rng, 3, 3);
  const LpSolution base = solve_lp(lp);
  ASSERT_EQ(base.status, LpStatus::kOptimal);
  std::vector<Index> rp(static_cast<std::size_t>(lp.rows()));
  std::vector<Index> cp(static_cast<std::size_t>(lp.cols()));
  std::iota(rp.begin(), rp.end(), 0);
  std::iota(cp.begin(), cp.end(), 0);
  std::shuffle(rp.begin(), rp.end(), rng);
  std::shuffle(cp.begin(), cp.end(), rng);
  Matrix a(lp.rows(), lp.cols());
  Vector b(lp.rows()), c(lp.cols());
  for (Index i = 0; i < lp.rows(); ++i) {
    b(i) = lp.b()(rp[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < lp.cols(); ++j) {
      a(i, j) = lp.A()(rp[static_cast<std::size_t>(i)], cp[static_cast<std::size_t>(j)]);
    }
  }
  for (Index j = 0; j < lp.cols(); ++j) c(j) = lp.c()(cp[static_cast<std::size_t>(j)]);
  const LpSolution perm = solve_lp(StandardFormLP(a, b, c));
  ASSERT_EQ(perm.status, LpStatus::kOptimal);
  EXPECT_NEAR(perm.objective, base.objective, 1e-10);
  for (Index j = 0; j < lp.cols(); ++j) {
    EXPECT_NEAR(perm.x(j), base.x(cp[static_cast<std::size_t>(j)]), 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomLp, ::testing::Range(0, 12));

TEST(PlugIn2x2, ClosedForm) {
  const Eigen::Matrix2d plan = plug_in_2x2({0.6, 0.4}, {0.5, 0.5});
  EXPECT_NEAR(plan(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(plan(0, 1), 0.1, 1e-15);
  EXPECT_NEAR(plan(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(plan(1, 1), 0.4, 1e-15);
  const Eigen::Matrix2d eq = plug_in_2x2({0.5, 0.5}, {0.5, 0.5});
  EXPECT_EQ(eq, (Eigen::Matrix2d() << 0.5, 0, 0, 0.5).finished());
  EXPECT_EQ(code_of([] { plug_in_2x2({0.7, 0.7}, {0.5, 0.5}); }), ErrorCode::kDomainError);
}

TEST(PlugIn2x2, AgreesWithSimplex) {
  Rng rng = make_stream(303, 0);
  Matrix cost(2, 2);
  cost << 0, 1, 2, 0;
  for (int i = 0; i < 200; ++i) {
    const Vector t = multinomial_counts(50, flat_dirichlet(2, rng), rng) / 50.0;
    const Vector s = multinomial_counts(50, flat_dirichlet(2, rng), rng) / 50.0;
    const LpSolution sol = solve_lp(ot_to_lp({t, s, cost}));
    const Matrix closed = plug_in_2x2(t, s);
    EXPECT_LE((unflatten(sol.x, 2, 2) - closed).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ZeroSet, Examples) {
  EXPECT_EQ(zero_set(vec({0.5, 0, 0, 0.5})).indices, (std::vector<Index>{1, 2}));
  EXPECT_EQ(zero_set(vec({1, 0, 0})).indices, (std::vector<Index>{1, 2}));
  EXPECT_EQ(zero_set(vec({1e-10, 1})).indices, (std::vector<Index>{0}));
  EXPECT_EQ(code_of([] { zero_set(vec({5e-9, 1})); }), ErrorCode::kAmbiguousZero);
}

TEST(CheckAssumptions, TwoByTwoTransport) {
  const AssumptionReport rep = check_assumptions(ot_2x2());
  EXPECT_TRUE(rep.row_rank_ok);
  EXPECT_TRUE(rep.slater_ok);
  EXPECT_TRUE(rep.unique_solution_ok);
  EXPECT_TRUE(rep.degenerate);
  EXPECT_GT(rep.slater_point.minCoeff(), 0.0);
}

TEST(CheckAssumptions, RankAndUniquenessFlags) {
  Matrix dup(2, 3);
  dup << 1, 1, 1, 1, 1, 1;
  EXPECT_FALSE(check_assumptions(dup, vec({1, 1}), vec({0, 1, 2})).row_rank_ok);
  const AssumptionReport flat = check_assumptions(row({1, 1, 1}), vec({1}), Vector::Zero(3));
  EXPECT_TRUE(flat.row_rank_ok);
  EXPECT_FALSE(flat.unique_solution_ok);
}

TEST(NullSpace, Examples) {
  const Matrix z = null_space_basis(row({1, 1}));
  ASSERT_EQ(z.cols(), 1);
  EXPECT_NEAR(std::abs(z(0, 0)), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(z(0, 0), -z(1, 0), 1e-15);
  EXPECT_EQ(null_space_basis(Matrix::Identity(3, 3)).cols(), 0);
  Matrix dup(2, 3);
  dup << 1, 2, 3, 2, 4, 6;
  EXPECT_EQ(code_of([&] { null_space_basis(dup); }), ErrorCode::kRankDeficient);
}

TEST(NullSpace, RandomFullRank) {
  Rng rng = make_stream(404, 0);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a(5, 8);
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    const Matrix z = null_space_basis(a);
    ASSERT_EQ(z.cols(), 3);
    EXPECT_LE((a * z).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((z.transpose() * z - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

}  // namespace
}  // namespace lpdebias
