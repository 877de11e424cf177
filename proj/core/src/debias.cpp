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

#include "lpdebias/debias.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "lpdebias/error.hpp"

namespace lpdebias {
namespace {

constexpr double kStationarityTol = 1e-10;
constexpr double kUnboundedNorm = 1e12;

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Vector indicator(Index m, const ZeroSet& zs) {
  Vector mask = Vector::Zero(m);
  for (Index i : zs.indices) mask(i) = 1.0;
  return mask;
}

double reduced_objective(const Vector& c, const PenaltySpec& pen, const Vector& mask,
                         const Vector& d) {
  double f = c.dot(d);
  for (Index i = 0; i < d.size(); ++i) {
    if (mask(i) != 0.0) f += pen.p(-d(i));
  }
  return f;
}

}  // namespace

Vector two_point_extrapolation(const Vector& x_r1, double r1, const Vector& x_r2,
                               double r2) {
  if (!(r1 > 0.0) || !(r2 > 0.0) || r1 == r2 || x_r1.size() != x_r2.size()) {
    throw Error(ErrorCode::kInvalidInput, "extrapolation needs two distinct positive r");
  }
  const double w = r1 - r2;
  return (r1 / w) * x_r2 - (r2 / w) * x_r1;
}

DebiasedEstimate debiased_estimate(const StandardFormLP& lp_n, const PenaltySpec& pen,
                                   double r_n, const SolverOptions& opts) {
  DebiasedEstimate est;
  est.r_n = r_n;
  try {
    est.coarse = solve_penalized(lp_n, pen, r_n, opts);
  } catch (const Error& e) {
    std::ostringstream os;
    os << "solve at r = " << r_n << " failed: " << e.what();
    throw Error(e.code(), os.str());
  }
  SolverOptions fine_opts = opts;
  fine_opts.warm_start = est.coarse.lambda;
  fine_opts.warm_start_x = est.coarse.x;
  try {
    est.fine = solve_penalized(lp_n, pen, 0.5 * r_n, fine_opts);
  } catch (const Error& e) {
    std::ostringstream os;
    os << "solve at r/2 = " << 0.5 * r_n << " failed: " << e.what();
    throw Error(e.code(), os.str());
  }
  est.x_hat = 2.0 * est.fine.x - est.coarse.x;
  est.d_hat = (2.0 / r_n) * (est.coarse.x - est.fine.x);
  return est;
}

Vector oracle_d_star(const StandardFormLP& lp, const PenaltySpec& pen, const ZeroSet& I0) {
  const Matrix& a = lp.A();
  const Vector& c = lp.c();
  const Index m = lp.cols();
  const Matrix z = null_space_basis(a);
  const Vector mask = indicator(m, I0);
  if (z.cols() == 0) return Vector::Zero(m);

  Vector d = Vector::Zero(m);
  if (!pen.full_domain() && !I0.indices.empty()) {
    // A direction from x* into the relative interior is positive on I0.
    const AssumptionReport rep = check_assumptions(lp);
    const LpSolution sol = solve_lp(lp);
    if (!rep.slater_ok || sol.status != LpStatus::kOptimal) {
      throw Error(ErrorCode::kUnbounded, "no interior direction for the bias program");
    }
    d = z * (z.transpose() * (rep.slater_point - sol.x));
    for (Index i : I0.indices) {
      if (!(d(i) > 0.0)) {
        throw Error(ErrorCode::kUnbounded, "no interior direction for the bias program");
      }
    }
    d /= d.cwiseAbs().maxCoeff();
  }
  auto in_domain = [&](const Vector& v) {
    if (pen.full_domain()) return v.allFinite();
    for (Index i : I0.indices) {
      if (!(v(i) > 0.0)) return false;
    }
    return v.allFinite();
  };

  double f = reduced_objective(c, pen, mask, d);
  bool polished = false;
  for (int it = 0; it < 500; ++it) {
    Vector w = Vector::Zero(m);
    Vector s = Vector::Zero(m);
    for (Index i : I0.indices) {
      w(i) = pen.dp(-d(i));
      s(i) = pen.d2p(-d(i));
    }
    const Vector grad = z.transpose() * (c - w);
    const double gnorm = inf_norm(grad);
    if (gnorm <= kStationarityTol && polished) return d;
    polished = gnorm <= kStationarityTol;
    const Matrix h = z.transpose() * s.asDiagonal() * z;
    Eigen::LDLT<Matrix> ldlt(h);
    Vector step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().minCoeff() > 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      step = -ldlt.solve(grad);
    } else {
      step = -grad;
    }
    const Vector dd = z * step;
    const double slope = grad.dot(step);
    double t = 1.0;
    bool accepted = false;
    const bool local = gnorm <= 1e-6;
    for (int bt = 0; bt < 80; ++bt, t *= 0.5) {
      const Vector trial = d + t * dd;
      if (!in_domain(trial)) continue;
      const double ft = reduced_objective(c, pen, mask, trial);
      if (std::isfinite(ft) && (local || ft <= f + 1e-4 * t * slope)) {
        d = trial;
        f = ft;
        accepted = true;
        break;
      }
    }
    if (inf_norm(d) > kUnboundedNorm || f < -kUnboundedNorm) {
      throw Error(ErrorCode::kUnbounded, "bias program objective is unbounded below");
    }
    if (!accepted) {
      if (polished) return d;
      break;
    }
  }
  std::ostringstream os;
  os << "bias program Newton stalled";
  throw Error(ErrorCode::kNonConvergence, os.str());
}

Vector oracle_d_star(const StandardFormLP& lp, const PenaltySpec& pen) {
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::kOptimal) {
    throw Error(ErrorCode::kInvalidInput, "linear program has no optimal solution");
  }
  return oracle_d_star(lp, pen, zero_set(sol));
}

Vector sigma_diagonal(const PenaltySpec& pen, const Vector& d_star, const ZeroSet& I0) {
  Vector s = Vector::Zero(d_star.size());
  for (Index i : I0.indices) s(i) = pen.d2p(-d_star(i));
  return s;
}

// Coordinates with Sigma_ii = 0 (set S) carry no cost, so each column solves
//   min sum_N sigma_i x_i^2  s.t.  Q^T A_N x_N = Q^T e_j,
// with Q spanning range(A_S)^perp, and then A_S x_S = e_j - A_N x_N. The
// weighted part is a minimum-norm solve in y = sqrt(sigma) x, which stays
// accurate when sigma spans many orders of magnitude.
Matrix oracle_M_star(const Matrix& a, const Vector& sigma) {
  const Index k = a.rows();
  const Index m = a.cols();
  if (sigma.size() != m || (sigma.size() && sigma.minCoeff() < 0.0) || !sigma.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "Sigma must be a nonnegative diagonal of length m");
  }
  if (numerical_rank(a) < k) {
    throw Error(ErrorCode::kRankDeficient, "A does not have full row rank");
  }
  std::vector<Index> free_idx, weighted;
  for (Index i = 0; i < m; ++i) (sigma(i) > 0.0 ? weighted : free_idx).push_back(i);
  const Index ns = static_cast<Index>(free_idx.size());
  const Index nw = static_cast<Index>(weighted.size());
  auto singular = [](const std::string& why) {
    throw Error(ErrorCode::kSingularKkt, "Z^T Sigma Z is singular: " + why);
  };

  Matrix a_s(k, ns), a_w(k, nw);
  for (Index j = 0; j < ns; ++j) a_s.col(j) = a.col(free_idx[static_cast<std::size_t>(j)]);
  for (Index j = 0; j < nw; ++j) a_w.col(j) = a.col(weighted[static_cast<std::size_t>(j)]);

  Matrix q = Matrix::Identity(k, k);
  Eigen::ColPivHouseholderQR<Matrix> qr_s;
  if (ns > 0) {
    qr_s.compute(a_s);
    qr_s.setThreshold(kRankPivotFloor);
    if (qr_s.rank() < ns) {
      singular("columns with zero weight are linearly dependent");
    }
    const Matrix full_q = qr_s.householderQ();
    q = full_q.rightCols(k - ns);
  }
  Matrix m_star = Matrix::Zero(m, k);
  Matrix x_w = Matrix::Zero(nw, k);
  if (q.cols() > 0) {
    if (nw == 0) singular("no weighted coordinates");
    const Vector root = sigma(weighted).cwiseSqrt();
    const Matrix c = q.transpose() * a_w * root.cwiseInverse().asDiagonal();
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(c);
    cod.setThreshold(1e-12);
    if (cod.rank() < c.rows()) singular("weighted columns do not span the complement");
    const Matrix y = cod.solve(q.transpose());
    x_w = root.cwiseInverse().asDiagonal() * y;
  }
  for (Index j = 0; j < nw; ++j) m_star.row(weighted[static_cast<std::size_t>(j)]) = x_w.row(j);
  if (ns > 0) {
    const Matrix rest = Matrix::Identity(k, k) - a_w * x_w;
    const Matrix x_s = qr_s.solve(rest);
    for (Index j = 0; j < ns; ++j) m_star.row(free_idx[static_cast<std::size_t>(j)]) = x_s.row(j);
  }
  return m_star;
}

ExpansionOracle build_oracle(const StandardFormLP& lp, const PenaltySpec& pen, double tol) {
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::kOptimal) {
    throw Error(ErrorCode::kInvalidInput, "linear program has no optimal solution");
  }
  ExpansionOracle o;
  o.x_star = sol.x;
  o.I0 = zero_set(sol, tol);
  o.d_star = oracle_d_star(lp, pen, o.I0);
  o.sigma = sigma_diagonal(pen, o.d_star, o.I0);
  o.M_star = oracle_M_star(lp.A(), o.sigma);
  return o;
}

Vector expansion_residual(const StandardFormLP& lp, const PenaltySpec& pen, double r,
                          const Vector& b_prime, const ExpansionOracle& oracle,
                          const SolverOptions& opts) {
  const PenalizedSolution sol = solve_penalized(lp.with_rhs(b_prime), pen, r, opts);
  return sol.x - oracle.x_star - r * oracle.d_star - oracle.M_star * (b_prime - lp.b());
}

}  // namespace lpdebias
