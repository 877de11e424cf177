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

// Standard-form linear programs, the exact simplex baseline and structural
// checks on the program.
//
//   minimize <c, x>  subject to  A x = b,  x >= 0.
//
// Plans and flows are always flattened row-major.

#ifndef LPDEBIAS_LP_HPP_
#define LPDEBIAS_LP_HPP_

#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace lpdebias {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kFeasibilityTol = 1e-9;
inline constexpr double kRankPivotFloor = 1e-7;

// Numerical rank of A: number of pivots of a column-pivoted QR whose
// magnitude exceeds floor * |largest pivot|.
Index numerical_rank(const Matrix& a, double floor = kRankPivotFloor);

// Immutable (A, b, c) triple. A must be finite with full row rank; b and c
// must be finite. The constraint matrix and cost are shared between copies,
// so with_rhs() is cheap and safe to call from many threads.
class StandardFormLP {
 public:
  StandardFormLP(Matrix a, Vector b, Vector c);

  const Matrix& A() const { return *a_; }
  const Vector& b() const { return b_; }
  const Vector& c() const { return *c_; }
  Index rows() const { return a_->rows(); }
  Index cols() const { return a_->cols(); }

  // Same A and c with a new right-hand side. The rank check is not repeated.
  StandardFormLP with_rhs(Vector b) const;

 private:
  StandardFormLP(std::shared_ptr<const Matrix> a, Vector b,
                 std::shared_ptr<const Vector> c);

  std::shared_ptr<const Matrix> a_;
  Vector b_;
  std::shared_ptr<const Vector> c_;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

std::string_view to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  Vector x;
  std::vector<Index> basis;  // sorted, size k when optimal
  double objective = 0.0;
  Vector dual;            // lambda with A^T lambda <= c at optimality
  Vector reduced_costs;   // c - A^T lambda
  double primal_residual = 0.0;
  Index iterations = 0;
};

struct SimplexOptions {
  double tol = kFeasibilityTol;
  // Reciprocal condition estimate of the basis below which the factorization
  // is declared broken.
  double stability_floor = 1e-13;
  Index max_iter = 0;  // 0 selects 50 * (rows + cols)
};

// Two-phase revised simplex with Bland's rule. Throws NumericalBreakdown when
// the basis becomes numerically singular or the final certificate fails.
LpSolution solve_lp(const StandardFormLP& lp, const SimplexOptions& opts = {});

// Closed form of the 2x2 transport plan with cost penalizing off-diagonal
// mass: (min{t1,s1}, (t1-s1)+; (t2-s2)+, min{t2,s2}).
Eigen::Matrix2d plug_in_2x2(const Eigen::Vector2d& t, const Eigen::Vector2d& s,
                            double tol = kFeasibilityTol);

struct ZeroSet {
  std::vector<Index> indices;  // 0-based, sorted
  double tol = kFeasibilityTol;
};

// Throws AmbiguousZero when an entry lies in (tol, 10 tol).
ZeroSet zero_set(const LpSolution& sol, double tol = kFeasibilityTol);
ZeroSet zero_set(const Vector& x, double tol = kFeasibilityTol);

struct AssumptionReport {
  bool row_rank_ok = false;
  bool slater_ok = false;
  bool unique_solution_ok = false;
  bool degenerate = false;
  Index rank = 0;
  double slater_margin = 0.0;  // min entry of the exhibited point
  Vector slater_point;         // empty unless slater_ok
};

// Structural checks. Uniqueness is certified by the sufficient condition of
// strictly positive reduced costs on every nonbasic column.
AssumptionReport check_assumptions(const Matrix& a, const Vector& b,
                                   const Vector& c,
                                   double tol = kFeasibilityTol);
AssumptionReport check_assumptions(const StandardFormLP& lp,
                                   double tol = kFeasibilityTol);

// Orthonormal basis of ker(A), m x (m - k). Throws RankDeficient when the
// numerical rank is below the number of rows.
Matrix null_space_basis(const Matrix& a, double floor = kRankPivotFloor);

}  // namespace lpdebias

#endif  // LPDEBIAS_LP_HPP_
