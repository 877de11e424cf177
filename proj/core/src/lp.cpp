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

#include "lpdebias/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpdebias/error.hpp"

namespace lpdebias {

Index numerical_rank(const Matrix& a, double floor) {
  if (a.size() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  const auto& r = qr.matrixQR();
  const Index diag = std::min(r.rows(), r.cols());
  const double lead = std::abs(r(0, 0));
  if (lead == 0.0) return 0;
  Index rank = 0;
  for (Index i = 0; i < diag; ++i) {
    if (std::abs(r(i, i)) > floor * lead) ++rank;
  }
  return rank;
}

StandardFormLP::StandardFormLP(Matrix a, Vector b, Vector c) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw Error(ErrorCode::kInvalidInput, "constraint matrix must be non-empty");
  }
  if (b.size() != a.rows() || c.size() != a.cols()) {
    std::ostringstream os;
    os << "dimension mismatch: A is " << a.rows() << "x" << a.cols()
       << ", b has " << b.size() << ", c has " << c.size();
    throw Error(ErrorCode::kInvalidInput, os.str());
  }
  if (!a.allFinite() || !b.allFinite() || !c.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "non-finite entry in (A, b, c)");
  }
  if (a.rows() > a.cols()) {
    throw Error(ErrorCode::kRankDeficient, "more rows than columns");
  }
  const Index rank = numerical_rank(a);
  if (rank < a.rows()) {
    std::ostringstream os;
    os << "A has numerical rank " << rank << " < " << a.rows() << " rows";
    throw Error(ErrorCode::kRankDeficient, os.str());
  }
  a_ = std::make_shared<const Matrix>(std::move(a));
  b_ = std::move(b);
  c_ = std::make_shared<const Vector>(std::move(c));
}

StandardFormLP::StandardFormLP(std::shared_ptr<const Matrix> a, Vector b,
                               std::shared_ptr<const Vector> c)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {}

StandardFormLP StandardFormLP::with_rhs(Vector b) const {
  if (b.size() != rows()) {
    throw Error(ErrorCode::kInvalidInput, "right-hand side has wrong length");
  }
  if (!b.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "non-finite right-hand side");
  }
  return StandardFormLP(a_, std::move(b), c_);
}

std::string_view to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

void require_simplex_point(const Eigen::Vector2d& v, double tol,
                           const char* name) {
  if (!v.allFinite() || v.minCoeff() < -tol || std::abs(v.sum() - 1.0) > tol) {
    std::ostringstream os;
    os << name << " = (" << v(0) << ", " << v(1)
       << ") is not on the probability simplex";
    throw Error(ErrorCode::kDomainError, os.str());
  }
}

}  // namespace

Eigen::Matrix2d plug_in_2x2(const Eigen::Vector2d& t, const Eigen::Vector2d& s,
                            double tol) {
  require_simplex_point(t, tol, "t");
  require_simplex_point(s, tol, "s");
  Eigen::Matrix2d plan;
  plan(0, 0) = std::min(t(0), s(0));
  plan(0, 1) = std::max(t(0) - s(0), 0.0);
  plan(1, 0) = std::max(t(1) - s(1), 0.0);
  plan(1, 1) = std::min(t(1), s(1));
  return plan;
}

ZeroSet zero_set(const Vector& x, double tol) {
  ZeroSet out;
  out.tol = tol;
  for (Index i = 0; i < x.size(); ++i) {
    const double v = std::abs(x(i));
    if (v <= tol) {
      out.indices.push_back(i);
    } else if (v < 10.0 * tol) {
      std::ostringstream os;
      os << "|x[" << i << "]| = " << v << " lies between tol = " << tol
         << " and 10 tol";
      throw Error(ErrorCode::kAmbiguousZero, os.str());
    }
  }
  return out;
}

ZeroSet zero_set(const LpSolution& sol, double tol) {
  if (sol.status != LpStatus::kOptimal) {
    throw Error(ErrorCode::kInvalidInput, "zero set of a non-optimal solution");
  }
  return zero_set(sol.x, tol);
}

AssumptionReport check_assumptions(const Matrix& a, const Vector& b,
                                   const Vector& c, double tol) {
  AssumptionReport report;
  const Index k = a.rows();
  const Index m = a.cols();
  report.rank = numerical_rank(a);
  report.row_rank_ok = report.rank == k && k >= 1 && k <= m;
  if (!report.row_rank_ok) return report;

  // max s  s.t. A x = b, x >= s 1, s <= cap. With x = y + s 1:
  //   A y + (A 1) s+ - (A 1) s- = b,  s+ + w = cap,  y, s+, s-, w >= 0.
  const double cap = std::max(1.0, b.cwiseAbs().maxCoeff());
  const Vector row_sums = a.rowwise().sum();
  Matrix aux_a = Matrix::Zero(k + 1, m + 3);
  aux_a.topLeftCorner(k, m) = a;
  aux_a.col(m).head(k) = row_sums;
  aux_a.col(m + 1).head(k) = -row_sums;
  aux_a(k, m) = 1.0;
  aux_a(k, m + 2) = 1.0;
  Vector aux_b(k + 1);
  aux_b << b, cap;
  Vector aux_c = Vector::Zero(m + 3);
  aux_c(m) = -1.0;
  aux_c(m + 1) = 1.0;
  const LpSolution slater =
      solve_lp(StandardFormLP(std::move(aux_a), std::move(aux_b), std::move(aux_c)));
  if (slater.status == LpStatus::kOptimal) {
    const double s = slater.x(m) - slater.x(m + 1);
    report.slater_margin = s;
    if (s > tol) {
      report.slater_point = slater.x.head(m).array() + s;
      report.slater_ok = report.slater_point.minCoeff() > 0.0;
    }
  }

  const LpSolution sol = solve_lp(StandardFormLP(a, b, c));
  if (sol.status == LpStatus::kOptimal) {
    std::vector<bool> in_basis(static_cast<std::size_t>(m), false);
    for (Index j : sol.basis) in_basis[static_cast<std::size_t>(j)] = true;
    bool strict = true;
    for (Index j = 0; j < m; ++j) {
      if (!in_basis[static_cast<std::size_t>(j)] && sol.reduced_costs(j) <= tol) {
        strict = false;
        break;
      }
    }
    report.unique_solution_ok = strict;
    const Index support = (sol.x.array() > tol).count();
    report.degenerate = support < k;
  }
  return report;
}

AssumptionReport check_assumptions(const StandardFormLP& lp, double tol) {
  return check_assumptions(lp.A(), lp.b(), lp.c(), tol);
}

Matrix null_space_basis(const Matrix& a, double floor) {
  const Index k = a.rows();
  const Index m = a.cols();
  Eigen::ColPivHouseholderQR<Matrix> qr(a.transpose());
  const auto& r = qr.matrixQR();
  const double lead = k > 0 ? std::abs(r(0, 0)) : 0.0;
  Index rank = 0;
  for (Index i = 0; i < std::min(k, m); ++i) {
    if (std::abs(r(i, i)) > floor * lead) ++rank;
  }
  if (rank < k) {
    std::ostringstream os;
    os << "null space requested for A of rank " << rank << " < " << k;
    throw Error(ErrorCode::kRankDeficient, os.str());
  }
  if (m == k) return Matrix(m, 0);
  Matrix select = Matrix::Zero(m, m - k);
  select.bottomRows(m - k).setIdentity();
  return qr.householderQ() * select;
}

}  // namespace lpdebias
