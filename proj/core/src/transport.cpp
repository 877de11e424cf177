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

#include "lpdebias/transport.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include "lpdebias/debias.hpp"
#include "lpdebias/error.hpp"

namespace lpdebias {
namespace {

bool on_simplex(const Vector& v, double tol) {
  return v.size() > 0 && v.allFinite() && v.minCoeff() >= -tol && std::abs(v.sum() - 1.0) <= tol;
}

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

}  // namespace

void validate(const OtProblem& prob) {
  constexpr double kTol = 1e-12;
  if (!on_simplex(prob.t, kTol) || !on_simplex(prob.s, kTol)) {
    throw Error(ErrorCode::kInvalidInput, "marginals must lie on the probability simplex");
  }
  if (prob.cost.rows() != prob.t.size() || prob.cost.cols() != prob.s.size() ||
      !prob.cost.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "cost must be finite with shape p x q");
  }
}

Vector ot_rhs(const Vector& t, const Vector& s) {
  Vector b(t.size() + s.size() - 1);
  b << t, s.head(s.size() - 1);
  return b;
}

StandardFormLP ot_to_lp(const OtProblem& prob) {
  validate(prob);
  const Index p = prob.t.size();
  const Index q = prob.s.size();
  Matrix a = Matrix::Zero(p + q - 1, p * q);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < q; ++j) {
      a(i, i * q + j) = 1.0;
      if (j < q - 1) a(p + j, i * q + j) = 1.0;
    }
  }
  return StandardFormLP(std::move(a), ot_rhs(prob.t, prob.s), flatten(prob.cost));
}

Matrix unflatten(const Vector& x, Index p, Index q) {
  if (x.size() != p * q) throw Error(ErrorCode::kInvalidInput, "plan has wrong length");
  Matrix plan(p, q);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < q; ++j) plan(i, j) = x(i * q + j);
  }
  return plan;
}

Vector flatten(const Matrix& plan) {
  Vector x(plan.size());
  for (Index i = 0; i < plan.rows(); ++i) {
    for (Index j = 0; j < plan.cols(); ++j) x(i * plan.cols() + j) = plan(i, j);
  }
  return x;
}

Matrix grid_cost(Index L, double exponent) {
  if (L < 1) throw Error(ErrorCode::kInvalidInput, "grid side must be >= 1");
  const Index n = L * L;
  const double h = L > 1 ? 1.0 / static_cast<double>(L - 1) : 0.0;
  Matrix c(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      const double dx = h * static_cast<double>(a / L - b / L);
      const double dy = h * static_cast<double>(a % L - b % L);
      const double dist = std::sqrt(dx * dx + dy * dy);
      c(a, b) = exponent == 1.0 ? dist : std::pow(dist, exponent);
    }
  }
  return c;
}

SupportRestriction restrict_support(const OtProblem& prob) {
  SupportRestriction sr;
  for (Index i = 0; i < prob.t.size(); ++i) {
    if (prob.t(i) > 0.0) sr.rows.push_back(i);
  }
  for (Index j = 0; j < prob.s.size(); ++j) {
    if (prob.s(j) > 0.0) sr.cols.push_back(j);
  }
  if (sr.rows.empty() || sr.cols.empty()) {
    throw Error(ErrorCode::kInvalidInput, "marginal without positive mass");
  }
  const auto p = static_cast<Index>(sr.rows.size());
  const auto q = static_cast<Index>(sr.cols.size());
  sr.restricted.t.resize(p);
  sr.restricted.s.resize(q);
  sr.restricted.cost.resize(p, q);
  for (Index i = 0; i < p; ++i) sr.restricted.t(i) = prob.t(sr.rows[static_cast<std::size_t>(i)]);
  for (Index j = 0; j < q; ++j) sr.restricted.s(j) = prob.s(sr.cols[static_cast<std::size_t>(j)]);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < q; ++j) {
      sr.restricted.cost(i, j) =
          prob.cost(sr.rows[static_cast<std::size_t>(i)], sr.cols[static_cast<std::size_t>(j)]);
    }
  }
  return sr;
}

Vector embed_plan(const SupportRestriction& sr, const Vector& restricted_flat, Index p, Index q) {
  const auto rp = static_cast<Index>(sr.rows.size());
  const auto rq = static_cast<Index>(sr.cols.size());
  if (restricted_flat.size() != rp * rq) {
    throw Error(ErrorCode::kInvalidInput, "restricted plan has wrong length");
  }
  Vector full = Vector::Zero(p * q);
  for (Index i = 0; i < rp; ++i) {
    for (Index j = 0; j < rq; ++j) {
      full(sr.rows[static_cast<std::size_t>(i)] * q + sr.cols[static_cast<std::size_t>(j)]) =
          restricted_flat(i * rq + j);
    }
  }
  return full;
}

EntropicPlan sinkhorn(const OtProblem& prob, double lambda, double tol, Index max_iter) {
  validate(prob);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidInput, "entropic strength must be positive");
  }
  const SupportRestriction sr = restrict_support(prob);
  const OtProblem& rp = sr.restricted;
  const Index p = rp.t.size();
  const Index q = rp.s.size();
  const Matrix kc = -rp.cost / lambda;
  const Vector log_t = rp.t.array().log();
  const Vector log_s = rp.s.array().log();
  Vector f = Vector::Zero(p);  // potentials divided by lambda
  Vector g = Vector::Zero(q);
  Matrix plan(p, q);
  EntropicPlan out;
  out.lambda = lambda;
  double residual = std::numeric_limits<double>::infinity();
  Index it = 0;
  for (; it < max_iter; ++it) {
    for (Index i = 0; i < p; ++i) f(i) = log_t(i) - log_sum_exp(kc.row(i).transpose() + g);
    for (Index j = 0; j < q; ++j) g(j) = log_s(j) - log_sum_exp(kc.col(j) + f);
    plan = ((kc.colwise() + f).rowwise() + g.transpose()).array().exp();
    residual = (plan.rowwise().sum() - rp.t).cwiseAbs().sum() +
               (plan.colwise().sum().transpose() - rp.s).cwiseAbs().sum();
    if (residual <= tol) break;
  }
  if (!(residual <= tol)) {
    std::ostringstream os;
    os << "Sinkhorn stopped at marginal residual " << residual << " after " << it
       << " iterations (lambda = " << lambda << ")";
    throw Error(ErrorCode::kNonConvergence, os.str());
  }
  out.iterations = it + 1;
  out.marginal_residual = residual;
  out.plan = unflatten(embed_plan(sr, flatten(plan), prob.t.size(), prob.s.size()),
                       prob.t.size(), prob.s.size());
  return out;
}

std::vector<BiasProfileRow> entropic_bias_profile(const OtProblem& prob,
                                                  const std::vector<double>& lambdas) {
  const LpSolution sol = solve_lp(ot_to_lp(prob));
  if (sol.status != LpStatus::kOptimal) {
    throw Error(ErrorCode::kInvalidInput, "transport problem has no optimal plan");
  }
  std::vector<BiasProfileRow> rows;
  for (double lambda : lambdas) {
    const EntropicPlan ep = sinkhorn(prob, lambda);
    const double err = (flatten(ep.plan) - sol.x).cwiseAbs().maxCoeff();
    rows.push_back({lambda, err, lambda * std::log(1.0 / err)});
  }
  return rows;
}

ColocCurve colocalization(const Matrix& plan, const Matrix& cost, const Vector& xi_grid) {
  if (plan.rows() != cost.rows() || plan.cols() != cost.cols()) {
    throw Error(ErrorCode::kInvalidInput, "plan and cost shapes differ");
  }
  if (!std::is_sorted(xi_grid.data(), xi_grid.data() + xi_grid.size())) {
    throw Error(ErrorCode::kInvalidInput, "threshold grid must be sorted");
  }
  const Index total = plan.size();
  std::vector<Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return cost.data()[a] < cost.data()[b]; });
  ColocCurve curve;
  curve.xi = xi_grid;
  curve.values.resize(xi_grid.size());
  double acc = 0.0;
  std::size_t pos = 0;
  for (Index g = 0; g < xi_grid.size(); ++g) {
    while (pos < order.size() && cost.data()[order[pos]] <= xi_grid(g)) {
      acc += plan.data()[order[pos]];
      ++pos;
    }
    curve.values(g) = acc;
  }
  return curve;
}

Vector flow_rhs(const Vector& d) { return d.head(d.size() - 1); }

StandardFormLP rebalance_to_lp(const FlowProblem& prob, double tol) {
  const Index n = prob.d.size();
  if (n < 2 || prob.cost.rows() != n || prob.cost.cols() != n || !prob.cost.allFinite() ||
      !prob.d.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "flow problem needs N >= 2 and an N x N cost");
  }
  if (std::abs(prob.d.sum()) > tol) {
    std::ostringstream os;
    os << "net demand sums to " << prob.d.sum();
    throw Error(ErrorCode::kUnbalancedDemand, os.str());
  }
  Matrix a = Matrix::Zero(n - 1, n * (n - 1));
  Vector c(n * (n - 1));
  Index v = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (i < n - 1) a(i, v) += 1.0;
      if (j < n - 1) a(j, v) -= 1.0;
      c(v) = prob.cost(i, j);
      ++v;
    }
  }
  return StandardFormLP(std::move(a), flow_rhs(prob.d), std::move(c));
}

Matrix flow_to_matrix(const Vector& x, Index N) {
  if (x.size() != N * (N - 1)) throw Error(ErrorCode::kInvalidInput, "flow has wrong length");
  Matrix f = Matrix::Zero(N, N);
  Index v = 0;
  for (Index i = 0; i < N; ++i) {
    for (Index j = 0; j < N; ++j) {
      if (i != j) f(i, j) = x(v++);
    }
  }
  return f;
}

Estimator make_ot_estimator(const Matrix& cost, const PenaltySpec& pen, double r_n,
                            const SolverOptions& opts) {
  const Index p = cost.rows();
  const Index q = cost.cols();
  // With nonnegative costs, lambda = -1 gives c - A^T lambda >= 1 on every
  // support, so no auxiliary program is needed.
  const bool constant_start = !pen.full_domain() && cost.minCoeff() >= 0.0;
  auto full_start = std::make_shared<Vector>();
  if (!pen.full_domain() && !constant_start) {
    const OtProblem uniform{Vector::Constant(p, 1.0 / static_cast<double>(p)),
                            Vector::Constant(q, 1.0 / static_cast<double>(q)), cost};
    *full_start = dual_feasible_start(ot_to_lp(uniform), pen);
  }
  return [cost, pen, r_n, opts, p, q, full_start, constant_start](const Vector& ts) -> Vector {
    if (ts.size() != p + q) throw Error(ErrorCode::kInvalidInput, "expected (t, s)");
    const OtProblem prob{ts.head(p), ts.tail(q), cost};
    const SupportRestriction sr = restrict_support(prob);
    const StandardFormLP lp = ot_to_lp(sr.restricted);
    SolverOptions o = opts;
    if (!o.dual_start) {
      if (constant_start) {
        o.dual_start = Vector::Constant(lp.rows(), -1.0);
      } else if (full_start->size() > 0 && static_cast<Index>(sr.rows.size()) == p &&
                 static_cast<Index>(sr.cols.size()) == q) {
        o.dual_start = *full_start;
      }
    }
    const DebiasedEstimate est = debiased_estimate(lp, pen, r_n, o);
    return embed_plan(sr, est.x_hat, p, q);
  };
}

Estimator make_lp_estimator(const StandardFormLP& lp, const PenaltySpec& pen, double r_n,
                            const SolverOptions& opts) {
  SolverOptions o = opts;
  if (!pen.full_domain() && !o.dual_start) o.dual_start = dual_feasible_start(lp, pen);
  return [lp, pen, r_n, o](const Vector& b) -> Vector {
    return debiased_estimate(lp.with_rhs(b), pen, r_n, o).x_hat;
  };
}

}  // namespace lpdebias
