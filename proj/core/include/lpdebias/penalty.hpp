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

// Penalty catalog. A penalty p is the convex conjugate of a barrier q on
// (0, inf); the penalized program replaces x >= 0 by r * sum_i p(-x_i / r).

#ifndef LPDEBIAS_PENALTY_HPP_
#define LPDEBIAS_PENALTY_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace lpdebias {

enum class PenaltyKind {
  kLogBarrier,         // p(x) = -ln(-x)
  kInversePoly,        // p(x) = (-x)^-alpha
  kSmoothedQuadratic,  // p(x) = ln(1 + e^x)^2
  kExponential,        // p(x) = e^x
};

// Immutable description of one penalty. Evaluations outside dom p return
// +infinity rather than throwing.
class PenaltySpec {
 public:
  PenaltyKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double kappa() const { return kappa_; }

  // Supremum of dom p: 0 for the barrier-type kinds, +inf otherwise.
  double dom_upper() const;
  // True when p is finite on the whole line, so the dual needs no start.
  bool full_domain() const;

  double p(double x) const;
  double dp(double x) const;
  double d2p(double x) const;

  // q'(y), the inverse of p'. Requires y > 0.
  double conj_prime(double y) const;
  // q(y) = y q'(y) - p(q'(y)); q(0) = 0 for the full-domain kinds.
  double conj(double y) const;
  // q''(y) = 1 / p''(q'(y)).
  double conj_second(double y) const;

  // Decay rate: lim sup p'(-1/r) / beta(r) is finite as r -> 0.
  double beta(double r) const;

  // Short form accepted by parse_penalty: log, exp, invpoly:<alpha>, sq.
  std::string name() const;

 private:
  friend PenaltySpec make_penalty(PenaltyKind, double, double);
  PenaltyKind kind_ = PenaltyKind::kLogBarrier;
  double alpha_ = 1.0;
  double kappa_ = 3.0;
};

// alpha is used by kInversePoly only, kappa by the full-domain kinds.
// Throws DomainError for alpha <= 0 or kappa <= 0.
PenaltySpec make_penalty(PenaltyKind kind, double alpha = 1.0,
                         double kappa = 3.0);

// Parses "log", "exp", "sq" or "invpoly:<alpha>". Throws InvalidInput.
PenaltySpec parse_penalty(std::string_view text, double kappa = 3.0);

// q'(y) with a DomainError for y <= 0.
double conjugate_prime(const PenaltySpec& spec, double y);

// Largest of |p'(q'(y)) - y| and |p''(q'(y)) q''_fd(y) - 1| over the grid,
// where q''_fd is a five-point central difference of q'.
double verify_conjugacy(const PenaltySpec& spec, const std::vector<double>& grid);

}  // namespace lpdebias

#endif  // LPDEBIAS_PENALTY_HPP_
