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
#include <cmath>
#include <limits>
#include <sstream>

#include "lpdebias/error.hpp"
#include "lpdebias/lp.hpp"

namespace lpdebias {
namespace {

struct Tableau {
  const Matrix& a;
  const Vector& b;
  const Vector& c;
  Index allowed;  // columns [0, allowed) may enter
};

struct Factor {
  Eigen::PartialPivLU<Matrix> lu;
  Vector xb;
  Vector y;
};

Factor factor_basis(const Tableau& t, const std::vector<Index>& basis,
                    const SimplexOptions& opts) {
  const Index k = t.a.rows();
  Matrix bmat(k, k);
  Vector cb(k);
  for (Index i = 0; i < k; ++i) {
    bmat.col(i) = t.a.col(basis[static_cast<std::size_t>(i)]);
    cb(i) = t.c(basis[static_cast<std::size_t>(i)]);
  }
  Factor f;
  f.lu.compute(bmat);
  const double rcond = f.lu.rcond();
  if (!(rcond > opts.stability_floor)) {
    std::ostringstream os;
    os << "basis reciprocal condition " << rcond << " below "
       << opts.stability_floor;
    throw Error(ErrorCode::kNumericalBreakdown, os.str());
  }
  f.xb = f.lu.solve(t.b);
  f.y = f.lu.transpose().solve(cb);
  return f;
}

enum class Outcome { kOptimal, kUnbounded };

// Bland's rule: lowest-index improving column, lowest basis index among ties
// in the ratio test.
Outcome iterate(const Tableau& t, std::vector<Index>& basis,
                std::vector<char>& in_basis, const SimplexOptions& opts,
                Index max_iter, Index& iterations) {
  const Index k = t.a.rows();
  const double cost_scale = 1.0 + (t.c.size() ? t.c.cwiseAbs().maxCoeff() : 0.0);
  const double dtol = opts.tol * cost_scale;
  while (true) {
    if (iterations >= max_iter) {
      throw Error(ErrorCode::kNonConvergence,
                  "simplex iteration limit reached");
    }
    Factor f = factor_basis(t, basis, opts);
    Index entering = -1;
    for (Index j = 0; j < t.allowed; ++j) {
      if (in_basis[static_cast<std::size_t>(j)]) continue;
      const double d = t.c(j) - t.a.col(j).dot(f.y);
      if (d < -dtol) {
        entering = j;
        break;
      }
    }
    if (entering < 0) return Outcome::kOptimal;
    const Vector u = f.lu.solve(t.a.col(entering));
    Index leave_pos = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < k; ++i) {
      if (u(i) <= opts.tol) continue;
      const double ratio = std::max(f.xb(i), 0.0) / u(i);
      const Index bi = basis[static_cast<std::size_t>(i)];
      if (ratio < best - opts.tol ||
          (std::abs(ratio - best) <= opts.tol &&
           bi < basis[static_cast<std::size_t>(leave_pos)])) {
        best = std::min(best, ratio);
        leave_pos = i;
      }
    }
    if (leave_pos < 0) return Outcome::kUnbounded;
    in_basis[static_cast<std::size_t>(basis[static_cast<std::size_t>(leave_pos)])] = 0;
    basis[static_cast<std::size_t>(leave_pos)] = entering;
    in_basis[static_cast<std::size_t>(entering)] = 1;
    ++iterations;
  }
}

}  // namespace

LpSolution solve_lp(const StandardFormLP& lp, const SimplexOptions& opts) {
  const Matrix& a = lp.A();
  const Vector& b = lp.b();
  const Vector& c = lp.c();
  const Index k = a.rows();
  const Index m = a.cols();
  const Index max_iter = opts.max_iter > 0 ? opts.max_iter : 50 * (k + m);

  LpSolution sol;

  // Phase 1 on [S A | I] with S flipping rows so that S b >= 0.
  Matrix a1(k, m + k);
  Vector b1(k);
  for (Index i = 0; i < k; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    a1.row(i).head(m) = sign * a.row(i);
    b1(i) = sign * b(i);
  }
  a1.rightCols(k).setIdentity();
  Vector c1 = Vector::Zero(m + k);
  c1.tail(k).setOnes();

  std::vector<Index> basis(static_cast<std::size_t>(k));
  std::vector<char> in_basis(static_cast<std::size_t>(m + k), 0);
  for (Index i = 0; i < k; ++i) {
    basis[static_cast<std::size_t>(i)] = m + i;
    in_basis[static_cast<std::size_t>(m + i)] = 1;
  }
  Tableau phase1{a1, b1, c1, m + k};
  iterate(phase1, basis, in_basis, opts, max_iter, sol.iterations);

  {
    Factor f = factor_basis(phase1, basis, opts);
    double infeas = 0.0;
    for (Index i = 0; i < k; ++i) {
      if (basis[static_cast<std::size_t>(i)] >= m) infeas += std::max(f.xb(i), 0.0);
    }
    if (infeas > opts.tol * (1.0 + b.cwiseAbs().maxCoeff()) * static_cast<double>(k)) {
      sol.status = LpStatus::kInfeasible;
      return sol;
    }
    // Drive zero-level artificials out of the basis.
    for (Index i = 0; i < k; ++i) {
      if (basis[static_cast<std::size_t>(i)] < m) continue;
      Factor g = factor_basis(phase1, basis, opts);
      Index pick = -1;
      double best = 0.0;
      for (Index j = 0; j < m; ++j) {
        if (in_basis[static_cast<std::size_t>(j)]) continue;
        const Vector u = g.lu.solve(a1.col(j));
        if (std::abs(u(i)) > best) {
          best = std::abs(u(i));
          pick = j;
        }
        if (best > 1e-3) break;
      }
      if (pick < 0 || best <= opts.tol) {
        throw Error(ErrorCode::kNumericalBreakdown,
                    "cannot remove artificial column from basis");
      }
      in_basis[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])] = 0;
      basis[static_cast<std::size_t>(i)] = pick;
      in_basis[static_cast<std::size_t>(pick)] = 1;
    }
  }

  in_basis.resize(static_cast<std::size_t>(m));
  Tableau phase2{a, b, c, m};
  const Outcome outcome =
      iterate(phase2, basis, in_basis, opts, max_iter, sol.iterations);
  if (outcome == Outcome::kUnbounded) {
    sol.status = LpStatus::kUnbounded;
    return sol;
  }

  Factor f = factor_basis(phase2, basis, opts);
  sol.status = LpStatus::kOptimal;
  sol.x = Vector::Zero(m);
  for (Index i = 0; i < k; ++i) {
    sol.x(basis[static_cast<std::size_t>(i)]) = std::max(f.xb(i), 0.0);
  }
  sol.dual = f.y;
  sol.reduced_costs = c - a.transpose() * f.y;
  for (Index j : basis) sol.reduced_costs(j) = 0.0;
  sol.objective = c.dot(sol.x);
  sol.primal_residual = (a * sol.x - b).cwiseAbs().maxCoeff();
  sol.basis = basis;
  std::sort(sol.basis.begin(), sol.basis.end());

  const double scale = 1.0 + b.cwiseAbs().maxCoeff() + a.cwiseAbs().maxCoeff();
  const double cscale = 1.0 + c.cwiseAbs().maxCoeff();
  if (sol.primal_residual > 1e3 * opts.tol * scale ||
      sol.reduced_costs.minCoeff() < -1e3 * opts.tol * cscale) {
    std::ostringstream os;
    os << "optimality certificate failed: residual " << sol.primal_residual
       << ", min reduced cost " << sol.reduced_costs.minCoeff();
    throw Error(ErrorCode::kNumericalBreakdown, os.str());
  }
  return sol;
}

}  // namespace lpdebias
