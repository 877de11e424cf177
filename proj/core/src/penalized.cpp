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

#include "lpdebias/penalized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lpdebias/error.hpp"

namespace lpdebias {
namespace {

constexpr double kArmijo = 1e-4;
constexpr double kFullStepDecrement = 1e-4;
constexpr double kStiffFloor = 1.0;
// Curvature floor in the KKT block. Flat faces of the penalized objective
// (ties in the linear program) would otherwise make the system singular.
constexpr double kKktFloor = 1e-10;
constexpr double kDivergeBound = 1e12;
constexpr double kExpArgCap = 700.0;
constexpr double kStageTol = 1e-7;
constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

SolverMethod resolve(SolverMethod method, const PenaltySpec& pen) {
  if (method != SolverMethod::kAuto) return method;
  return pen.full_domain() ? SolverMethod::kPrimalDual : SolverMethod::kDual;
}

bool strictly_positive(const Vector& v) { return v.size() == 0 || v.minCoeff() > 0.0; }

double sum_q(const PenaltySpec& pen, const Vector& eta) {
  double s = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    s += pen.conj(pen.full_domain() ? std::max(eta(i), 0.0) : eta(i));
  }
  return s;
}

Vector recover_x(const PenaltySpec& pen, double r, const Vector& eta) {
  Vector x(eta.size());
  for (Index i = 0; i < eta.size(); ++i) x(i) = -r * pen.conj_prime(eta(i));
  return x;
}

// Solves H d = g for symmetric positive semidefinite H, adding Levenberg
// damping when the Cholesky factorization fails.
Vector spd_solve(const Matrix& h, const Vector& g) {
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() == Eigen::Success) {
    Vector d = llt.solve(g);
    if (d.allFinite()) return d;
  }
  const double scale = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (double mu = 1e-14 * scale; mu < 1e4 * scale; mu *= 10.0) {
    Matrix damped = h;
    damped.diagonal().array() += mu;
    llt.compute(damped);
    if (llt.info() == Eigen::Success) {
      Vector d = llt.solve(g);
      if (d.allFinite()) return d;
    }
  }
  throw Error(ErrorCode::kNumericalBreakdown, "dual Hessian is not positive definite");
}

void check_bounded(const Vector& x, double r) {
  if (!x.allFinite() || inf_norm(x) > kDivergeBound) {
    std::ostringstream os;
    os << "iterate left |x| <= " << kDivergeBound << " at r = " << r;
    throw Error(ErrorCode::kDiverged, os.str());
  }
}

// Max-margin dual point: maximize s subject to c - A^T lambda >= s 1, s <= cap,
// solved through its standard-form dual
//   minimize c^T y + cap z  s.t.  A y = 0,  1^T y + z = 1,  y, z >= 0.
Vector lp_dual_start(const StandardFormLP& lp, double* margin) {
  const Index k = lp.rows();
  const Index m = lp.cols();
  const double cap = std::max(1.0, inf_norm(lp.c()));
  Matrix a = Matrix::Zero(k + 1, m + 1);
  a.topLeftCorner(k, m) = lp.A();
  a.row(k).setOnes();
  Vector b = Vector::Zero(k + 1);
  b(k) = 1.0;
  Vector c(m + 1);
  c << lp.c(), cap;
  const LpSolution sol = solve_lp(StandardFormLP(std::move(a), std::move(b), std::move(c)));
  if (sol.status != LpStatus::kOptimal || !(sol.dual(k) > 0.0)) {
    std::ostringstream os;
    os << "no lambda with c - A^T lambda > 0 (best margin "
       << (sol.status == LpStatus::kOptimal ? sol.dual(k) : -kInf) << ")";
    throw Error(ErrorCode::kDualInfeasibleStart, os.str());
  }
  if (margin) *margin = sol.dual(k);
  return sol.dual.head(k);
}

struct Stage {
  double r;
  double tol;
  Index max_iter;
  bool record;
};

// One more full Newton step, kept only if it lowers the primal residual.
void polish_dual(const Matrix& a, const Vector& b, const PenaltySpec& pen, double r,
                 Vector& lambda, Vector& eta) {
  for (int pass = 0; pass < 2; ++pass) {
    const Vector x = recover_x(pen, r, eta);
    const Vector grad = b - a * x;
    Vector dvec(eta.size());
    for (Index i = 0; i < eta.size(); ++i) dvec(i) = r * pen.conj_second(eta(i));
    const Vector step = spd_solve(a * dvec.asDiagonal() * a.transpose(), grad);
    const Vector trial_eta = eta - a.transpose() * step;
    if (!strictly_positive(trial_eta)) return;
    const Vector trial_x = recover_x(pen, r, trial_eta);
    if (!(inf_norm(b - a * trial_x) < inf_norm(grad))) return;
    lambda += step;
    eta = trial_eta;
  }
}

PenalizedSolution dual_stage(const StandardFormLP& lp, const PenaltySpec& pen,
                             const Stage& st, Vector lambda,
                             const SolverOptions& opts) {
  const Matrix& a = lp.A();
  const Vector& b = lp.b();
  const Vector& c = lp.c();
  const double r = st.r;
  const double res_tol = st.tol * (1.0 + inf_norm(b));

  PenalizedSolution sol;
  sol.r = r;
  sol.method = SolverMethod::kDual;
  Vector eta = c - a.transpose() * lambda;
  if (!strictly_positive(eta)) {
    throw Error(ErrorCode::kDualInfeasibleStart, "starting lambda is not dual feasible");
  }
  double g = b.dot(lambda) - r * sum_q(pen, eta);
  if (st.record) sol.dual_trace.push_back(g);

  double prev_dec = kInf;
  int stalls = 0;
  bool converged = false;
  for (Index it = 0; it < st.max_iter; ++it) {
    const Vector x = recover_x(pen, r, eta);
    check_bounded(x, r);
    const Vector grad = b - a * x;
    const double res = inf_norm(grad);
    Vector dvec(eta.size());
    for (Index i = 0; i < eta.size(); ++i) dvec(i) = r * pen.conj_second(eta(i));
    const Matrix h = a * dvec.asDiagonal() * a.transpose();
    const Vector step = spd_solve(h, grad);
    const double dec2 = std::max(grad.dot(step), 0.0);
    const double dec = std::sqrt(dec2);
    sol.newton_decrement = dec;
    sol.iterations = it;
    if (res <= res_tol) {
      if (dec <= st.tol) {
        converged = true;
        break;
      }
      stalls = (dec < 1e-6 && dec > 0.5 * prev_dec) ? stalls + 1 : 0;
      if (stalls >= 2) {
        converged = true;
        break;
      }
    }
    prev_dec = dec;

    const Vector deta = -(a.transpose() * step);
    double t = 1.0;
    for (Index i = 0; i < eta.size(); ++i) {
      if (deta(i) < 0.0) t = std::min(t, opts.fraction_to_boundary * eta(i) / -deta(i));
    }
    const bool full = dec2 < kFullStepDecrement && t == 1.0;
    Vector trial_lambda;
    Vector trial_eta;
    double trial_g = -kInf;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt, t *= 0.5) {
      trial_lambda = lambda + t * step;
      trial_eta = eta + t * deta;
      if (!strictly_positive(trial_eta)) continue;
      trial_g = b.dot(trial_lambda) - r * sum_q(pen, trial_eta);
      if (!std::isfinite(trial_g)) continue;
      if (full || trial_g >= g + kArmijo * t * dec2) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (res <= res_tol) {
        converged = true;
        break;
      }
      std::ostringstream os;
      os << "dual line search cannot keep eta interior at r = " << r
         << " (residual " << res << ")";
      throw Error(ErrorCode::kDomainViolation, os.str());
    }
    lambda = std::move(trial_lambda);
    eta = std::move(trial_eta);
    g = trial_g;
    if (st.record) sol.dual_trace.push_back(g);
    sol.iterations = it + 1;
  }
  if (!converged) {
    std::ostringstream os;
    os << "dual Newton did not converge in " << st.max_iter << " iterations at r = " << r;
    throw Error(ErrorCode::kDiverged, os.str());
  }
  polish_dual(a, b, pen, r, lambda, eta);
  sol.x = recover_x(pen, r, eta);
  sol.lambda = std::move(lambda);
  sol.eta = std::move(eta);
  sol.primal_residual = inf_norm(a * sol.x - b);
  sol.dual_residual = 0.0;
  return sol;
}

struct Newton {
  Vector dx;
  Vector nu;
  double dec2;
};

// Newton step for the equality-constrained primal. Coordinates whose Hessian
// entry is below kStiffFloor stay in the KKT system; the rest are eliminated,
// so the eliminated block has entries of order one at most.
Newton primal_newton(const Matrix& a, const Vector& grad, const Vector& hdiag,
                     const Vector& rho) {
  const Index k = a.rows();
  const Index m = a.cols();
  std::vector<Index> stiff;
  Vector winv = Vector::Zero(m);
  for (Index i = 0; i < m; ++i) {
    if (hdiag(i) < kStiffFloor) {
      stiff.push_back(i);
    } else {
      winv(i) = 1.0 / hdiag(i);
    }
  }
  const Matrix aw = a * winv.asDiagonal();
  const Matrix kmat = aw * a.transpose();
  const Vector rhs1 = -rho - aw * grad;
  Newton out;
  out.dx.resize(m);
  const Index s = static_cast<Index>(stiff.size());
  if (s == 0) {
    out.nu = spd_solve(kmat, rhs1);
  } else {
    Matrix sys = Matrix::Zero(k + s, k + s);
    Vector rhs(k + s);
    sys.topLeftCorner(k, k) = kmat;
    rhs.head(k) = rhs1;
    for (Index j = 0; j < s; ++j) {
      const Index i = stiff[static_cast<std::size_t>(j)];
      sys.block(0, k + j, k, 1) = -a.col(i);
      sys.block(k + j, 0, 1, k) = -a.col(i).transpose();
      sys(k + j, k + j) = -std::max(hdiag(i), kKktFloor);
      rhs(k + j) = grad(i);
    }
    Eigen::PartialPivLU<Matrix> lu(sys);
    Vector z = lu.solve(rhs);
    if (!z.allFinite() || (sys * z - rhs).cwiseAbs().maxCoeff() >
                              1e-6 * (1.0 + inf_norm(rhs))) {
      Eigen::FullPivLU<Matrix> full(sys);
      z = full.solve(rhs);
      if (!z.allFinite()) {
        throw Error(ErrorCode::kNumericalBreakdown, "singular primal-dual KKT system");
      }
    }
    out.nu = z.head(k);
    for (Index j = 0; j < s; ++j) out.dx(stiff[static_cast<std::size_t>(j)]) = z(k + j);
  }
  const Vector atnu = a.transpose() * out.nu;
  for (Index i = 0; i < m; ++i) {
    if (hdiag(i) >= kStiffFloor) out.dx(i) = winv(i) * (-grad(i) - atnu(i));
  }
  out.dec2 = (hdiag.array() * out.dx.array().square()).sum();
  return out;
}

bool primal_in_domain(const PenaltySpec& pen, double r, const Vector& x) {
  if (!x.allFinite()) return false;
  if (!pen.full_domain()) return x.minCoeff() > 0.0;
  if (pen.kind() == PenaltyKind::kExponential) return (-x / r).maxCoeff() <= kExpArgCap;
  return true;
}

// One more full Newton step from a feasible point, kept only if it shrinks
// the Newton decrement.
void polish_primal(const StandardFormLP& lp, const PenaltySpec& pen, double r, Vector& x,
                   Vector& lambda) {
  const Matrix& a = lp.A();
  const Index m = lp.cols();
  auto newton_at = [&](const Vector& xv) {
    Vector grad(m), hdiag(m), d2p(m);
    for (Index i = 0; i < m; ++i) {
      const double u = -xv(i) / r;
      grad(i) = lp.c()(i) - pen.dp(u);
      d2p(i) = pen.d2p(u);
      hdiag(i) = d2p(i) / r;
    }
    return primal_newton(a, grad, hdiag, lp.b() - a * xv);
  };
  const Newton nt = newton_at(x);
  const Vector trial = x + nt.dx;
  if (!primal_in_domain(pen, r, trial)) return;
  const Newton next = newton_at(trial);
  if (!(next.dec2 < nt.dec2)) return;
  x = trial;
  lambda = -next.nu;
}

PenalizedSolution primal_dual_stage(const StandardFormLP& lp, const PenaltySpec& pen,
                                    const Stage& st, Vector x, Vector lambda,
                                    const SolverOptions& opts) {
  const Matrix& a = lp.A();
  const Vector& b = lp.b();
  const Vector& c = lp.c();
  const double r = st.r;
  const Index m = lp.cols();
  const double res_tol = st.tol * (1.0 + inf_norm(b));

  if (!primal_in_domain(pen, r, x)) {
    throw Error(ErrorCode::kDomainViolation, "primal start outside dom p");
  }
  PenalizedSolution sol;
  sol.r = r;
  sol.method = SolverMethod::kPrimalDual;

  Vector eta(m), grad(m), hdiag(m), d2p(m);
  auto evaluate = [&](const Vector& xv) {
    for (Index i = 0; i < m; ++i) {
      const double u = -xv(i) / r;
      eta(i) = pen.dp(u);
      d2p(i) = pen.d2p(u);
      hdiag(i) = d2p(i) / r;
    }
    grad = c - eta;
  };
  auto kkt_norm = [&](const Vector& xv, const Vector& lam) {
    Vector e(m);
    for (Index i = 0; i < m; ++i) e(i) = pen.dp(-xv(i) / r);
    const double rd = (c - e - a.transpose() * lam).squaredNorm();
    const double rp = (a * xv - b).squaredNorm();
    return std::sqrt(rd + rp);
  };

  double f = penalized_objective(lp, pen, r, x);
  double prev_dec = kInf;
  int stalls = 0;
  bool converged = false;
  for (Index it = 0; it < st.max_iter; ++it) {
    check_bounded(x, r);
    evaluate(x);
    const Vector rho = b - a * x;
    const double res = inf_norm(rho);
    const Newton nt = primal_newton(a, grad, hdiag, rho);
    const Vector new_lambda = -nt.nu;
    const double dec = std::sqrt(nt.dec2);
    sol.newton_decrement = dec;
    sol.iterations = it;
    if (st.record) sol.dual_trace.push_back(dual_objective(lp, pen, r, new_lambda));
    if (res <= res_tol) {
      lambda = new_lambda;
      if (dec <= st.tol) {
        converged = true;
        break;
      }
      stalls = (dec < 1e-6 && dec > 0.5 * prev_dec) ? stalls + 1 : 0;
      if (stalls >= 2) {
        converged = true;
        break;
      }
    }
    prev_dec = dec;

    double t = 1.0;
    if (!pen.full_domain()) {
      for (Index i = 0; i < m; ++i) {
        if (nt.dx(i) < 0.0) t = std::min(t, opts.fraction_to_boundary * x(i) / -nt.dx(i));
      }
    }
    const bool feasible = res <= res_tol;
    const bool full = feasible && nt.dec2 < kFullStepDecrement;
    const double merit = feasible ? 0.0 : kkt_norm(x, lambda);
    Vector trial;
    double trial_f = kInf;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt, t *= 0.5) {
      trial = x + t * nt.dx;
      if (!primal_in_domain(pen, r, trial)) continue;
      if (feasible) {
        trial_f = penalized_objective(lp, pen, r, trial);
        if (!std::isfinite(trial_f)) continue;
        if (full || trial_f <= f - kArmijo * t * nt.dec2) {
          accepted = true;
          break;
        }
      } else {
        const Vector trial_lambda = lambda + t * (new_lambda - lambda);
        if (kkt_norm(trial, trial_lambda) <= (1.0 - 0.01 * t) * merit) {
          lambda = trial_lambda;
          trial_f = penalized_objective(lp, pen, r, trial);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      if (feasible) {
        converged = true;
        break;
      }
      std::ostringstream os;
      os << "primal line search failed at r = " << r << " (residual " << res << ")";
      throw Error(ErrorCode::kDomainViolation, os.str());
    }
    x = std::move(trial);
    f = trial_f;
    sol.iterations = it + 1;
  }
  if (!converged) {
    std::ostringstream os;
    os << "primal-dual Newton did not converge in " << st.max_iter
       << " iterations at r = " << r;
    throw Error(ErrorCode::kDiverged, os.str());
  }
  polish_primal(lp, pen, r, x, lambda);
  evaluate(x);
  sol.x = std::move(x);
  sol.lambda = std::move(lambda);
  sol.eta = eta;
  sol.primal_residual = inf_norm(a * sol.x - b);
  sol.dual_residual = inf_norm(c - a.transpose() * sol.lambda - sol.eta);
  return sol;
}

Vector least_norm_point(const StandardFormLP& lp) {
  const Matrix& a = lp.A();
  const Matrix gram = a * a.transpose();
  return a.transpose() * gram.llt().solve(lp.b());
}

Vector strictly_feasible_point(const StandardFormLP& lp) {
  const AssumptionReport rep = check_assumptions(lp);
  if (!rep.slater_ok) {
    throw Error(ErrorCode::kInvalidInput,
                "no strictly positive feasible point for a barrier-type penalty");
  }
  return rep.slater_point;
}

std::vector<double> stage_schedule(double r, double r_start) {
  std::vector<double> rs;
  for (double v = r_start; v > 10.0 * r; v *= 0.1) rs.push_back(v);
  rs.push_back(r);
  return rs;
}

}  // namespace

std::string_view to_string(SolverMethod method) {
  switch (method) {
    case SolverMethod::kAuto: return "auto";
    case SolverMethod::kDual: return "dual";
    case SolverMethod::kPrimalDual: return "primal-dual";
  }
  return "unknown";
}

Vector dual_feasible_start(const StandardFormLP& lp, const PenaltySpec& pen) {
  if (pen.full_domain() || lp.c().minCoeff() > 0.0) return Vector::Zero(lp.rows());
  return lp_dual_start(lp, nullptr);
}

PenalizedSolution solve_penalized(const StandardFormLP& lp, const PenaltySpec& pen,
                                  double r, const SolverOptions& opts) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    std::ostringstream os;
    os << "penalty strength must be positive and finite, got " << r;
    throw Error(ErrorCode::kInvalidInput, os.str());
  }
  if (!(opts.tol > 0.0) || !(opts.fraction_to_boundary > 0.0) ||
      !(opts.fraction_to_boundary < 1.0) || opts.max_iter < 1) {
    throw Error(ErrorCode::kInvalidInput, "invalid solver options");
  }
  const SolverMethod method = resolve(opts.method, pen);
  const Vector& c = lp.c();

  if (method == SolverMethod::kDual) {
    Vector lambda;
    bool warm = false;
    if (opts.warm_start && opts.warm_start->size() == lp.rows() &&
        strictly_positive(c - lp.A().transpose() * *opts.warm_start)) {
      lambda = *opts.warm_start;
      warm = true;
    } else if (opts.dual_start && opts.dual_start->size() == lp.rows() &&
               strictly_positive(c - lp.A().transpose() * *opts.dual_start)) {
      lambda = *opts.dual_start;
    } else {
      lambda = dual_feasible_start(lp, pen);
      if (!strictly_positive(c - lp.A().transpose() * lambda)) {
        lambda = lp_dual_start(lp, nullptr);
      }
    }
    const double r_start = std::max(r, inf_norm(lp.b()));
    const std::vector<double> rs =
        (warm || !opts.continuation) ? std::vector<double>{r} : stage_schedule(r, r_start);
    Index total = 0;
    PenalizedSolution sol;
    for (std::size_t j = 0; j < rs.size(); ++j) {
      const bool last = j + 1 == rs.size();
      const Stage st{rs[j], last ? opts.tol : std::max(opts.tol, kStageTol), opts.max_iter,
                     last && opts.record_trace};
      sol = dual_stage(lp, pen, st, std::move(lambda), opts);
      total += sol.iterations;
      lambda = sol.lambda;
    }
    sol.iterations = total;
    return sol;
  }

  Vector x;
  Vector lambda = Vector::Zero(lp.rows());
  bool warm = false;
  if (opts.warm_start_x && opts.warm_start_x->size() == lp.cols() &&
      primal_in_domain(pen, r, *opts.warm_start_x)) {
    x = *opts.warm_start_x;
    warm = true;
    if (opts.warm_start && opts.warm_start->size() == lp.rows()) lambda = *opts.warm_start;
  } else if (opts.warm_start && opts.warm_start->size() == lp.rows()) {
    const Vector eta = c - lp.A().transpose() * *opts.warm_start;
    if (strictly_positive(eta)) {
      x = recover_x(pen, r, eta);
      lambda = *opts.warm_start;
      warm = primal_in_domain(pen, r, x);
    }
  }
  if (!warm) {
    x = pen.full_domain() ? least_norm_point(lp) : strictly_feasible_point(lp);
    lambda.setZero();
  }
  const double r_start = std::max(r, inf_norm(x));
  const std::vector<double> rs =
      (warm || !opts.continuation) ? std::vector<double>{r} : stage_schedule(r, r_start);
  Index total = 0;
  PenalizedSolution sol;
  for (std::size_t j = 0; j < rs.size(); ++j) {
    const bool last = j + 1 == rs.size();
    const Stage st{rs[j], last ? opts.tol : std::max(opts.tol, kStageTol), opts.max_iter,
                   last && opts.record_trace};
    sol = primal_dual_stage(lp, pen, st, std::move(x), std::move(lambda), opts);
    total += sol.iterations;
    x = sol.x;
    lambda = sol.lambda;
  }
  sol.iterations = total;
  return sol;
}

std::vector<PenalizedSolution> solve_path(const StandardFormLP& lp, const PenaltySpec& pen,
                                          const std::vector<double>& r_list,
                                          const SolverOptions& opts) {
  for (std::size_t j = 0; j < r_list.size(); ++j) {
    if (!(r_list[j] > 0.0) || (j > 0 && !(r_list[j] < r_list[j - 1]))) {
      throw Error(ErrorCode::kInvalidInput, "r_list must be positive and strictly decreasing");
    }
  }
  std::vector<PenalizedSolution> out;
  out.reserve(r_list.size());
  SolverOptions o = opts;
  for (double r : r_list) {
    try {
      out.push_back(solve_penalized(lp, pen, r, o));
    } catch (const Error& e) {
      std::ostringstream os;
      os << "path solve failed at r = " << r << ": " << e.what();
      throw Error(e.code(), os.str());
    }
    o.warm_start = out.back().lambda;
    o.warm_start_x = out.back().x;
  }
  return out;
}

double penalized_objective(const StandardFormLP& lp, const PenaltySpec& pen, double r,
                           const Vector& x) {
  double f = lp.c().dot(x);
  for (Index i = 0; i < x.size(); ++i) f += r * pen.p(-x(i) / r);
  return f;
}

double dual_objective(const StandardFormLP& lp, const PenaltySpec& pen, double r,
                      const Vector& lambda) {
  const Vector eta = lp.c() - lp.A().transpose() * lambda;
  return lp.b().dot(lambda) - r * sum_q(pen, eta);
}

double duality_gap(const StandardFormLP& lp, const PenaltySpec& pen, double r,
                   const PenalizedSolution& sol) {
  return penalized_objective(lp, pen, r, sol.x) - dual_objective(lp, pen, r, sol.lambda);
}

}  // namespace lpdebias
