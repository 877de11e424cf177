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

#include "lpdebias/penalty.hpp"

#include <algorithm>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <sstream>

#include "lpdebias/error.hpp"

namespace lpdebias {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kExpCap = 700.0;

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_softplus(double x) {
  if (x < -30.0) return x - 0.5 * std::exp(x);
  return std::log(softplus(x));
}

double log_sigmoid(double x) { return x < 0.0 ? x - softplus(x) : -softplus(-x); }

// log p'(x) for the smoothed quadratic and its derivative p''/p'.
double sq_log_dp(double x) { return std::log(2.0) + log_softplus(x) + log_sigmoid(x); }

double sq_log_dp_slope(double x) {
  const double s = sigmoid(x);
  const double ratio = x < -30.0 ? 1.0 + 0.5 * std::exp(x) : s / softplus(x);
  return ratio + (1.0 - s);
}

double sq_inverse(double y) {
  const double target = std::log(y);
  auto h = [&](double x) { return sq_log_dp(x) - target; };
  double x = y < 1.0 ? 0.5 * std::log(0.5 * y) : 0.5 * y;
  double lo = x - 1.0;
  double hi = x + 1.0;
  for (double step = 1.0; h(lo) > 0.0; step *= 2.0) lo -= step;
  for (double step = 1.0; h(hi) < 0.0; step *= 2.0) hi += step;
  x = std::clamp(x, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double hx = h(x);
    if (hx == 0.0) return x;
    if (hx < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    double next = x - hx / sq_log_dp_slope(x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                  (1.0 + std::abs(x))) {
      return next;
    }
    x = next;
  }
  return x;
}

}  // namespace

double PenaltySpec::dom_upper() const {
  switch (kind_) {
    case PenaltyKind::kLogBarrier:
    case PenaltyKind::kInversePoly:
      return 0.0;
    default:
      return kInf;
  }
}

bool PenaltySpec::full_domain() const { return dom_upper() == kInf; }

double PenaltySpec::p(double x) const {
  switch (kind_) {
    case PenaltyKind::kLogBarrier:
      return x < 0.0 ? -std::log(-x) : kInf;
    case PenaltyKind::kInversePoly:
      return x < 0.0 ? std::pow(-x, -alpha_) : kInf;
    case PenaltyKind::kSmoothedQuadratic: {
      const double sp = softplus(x);
      return sp * sp;
    }
    case PenaltyKind::kExponential:
      return std::exp(std::min(x, kExpCap));
  }
  return kInf;
}

double PenaltySpec::dp(double x) const {
  switch (kind_) {
    case PenaltyKind::kLogBarrier:
      return x < 0.0 ? -1.0 / x : kInf;
    case PenaltyKind::kInversePoly:
      return x < 0.0 ? alpha_ * std::pow(-x, -alpha_ - 1.0) : kInf;
    case PenaltyKind::kSmoothedQuadratic:
      return 2.0 * softplus(x) * sigmoid(x);
    case PenaltyKind::kExponential:
      return std::exp(std::min(x, kExpCap));
  }
  return kInf;
}

double PenaltySpec::d2p(double x) const {
  switch (kind_) {
    case PenaltyKind::kLogBarrier:
      return x < 0.0 ? 1.0 / (x * x) : kInf;
    case PenaltyKind::kInversePoly:
      return x < 0.0 ? alpha_ * (alpha_ + 1.0) * std::pow(-x, -alpha_ - 2.0) : kInf;
    case PenaltyKind::kSmoothedQuadratic: {
      const double s = sigmoid(x);
      return 2.0 * s * s + 2.0 * softplus(x) * s * (1.0 - s);
    }
    case PenaltyKind::kExponential:
      return std::exp(std::min(x, kExpCap));
  }
  return kInf;
}

double PenaltySpec::conj_prime(double y) const {
  switch (kind_) {
    case PenaltyKind::kLogBarrier:
      return -1.0 / y;
    case PenaltyKind::kInversePoly:
      return -std::pow(alpha_ / y, 1.0 / (alpha_ + 1.0));
    case PenaltyKind::kSmoothedQuadratic:
      return sq_inverse(y);
    case PenaltyKind::kExponential:
      return std::log(y);
  }
  return 0.0;
}

double PenaltySpec::conj(double y) const {
  switch (kind_) {
    case PenaltyKind::kLogBarrier:
      return y > 0.0 ? -1.0 - std::log(y) : kInf;
    case PenaltyKind::kInversePoly: {
      if (!(y > 0.0)) return kInf;
      const double a = alpha_;
      return -(a + 1.0) * std::pow(a, -a / (a + 1.0)) * std::pow(y, a / (a + 1.0));
    }
    case PenaltyKind::kSmoothedQuadratic: {
      if (y < 0.0) return kInf;
      if (y == 0.0) return 0.0;
      const double x = sq_inverse(y);
      return y * x - p(x);
    }
    case PenaltyKind::kExponential:
      if (y < 0.0) return kInf;
      if (y == 0.0) return 0.0;
      return y * std::log(y) - y;
  }
  return kInf;
}

double PenaltySpec::conj_second(double y) const {
  switch (kind_) {
    case PenaltyKind::kLogBarrier:
      return 1.0 / (y * y);
    case PenaltyKind::kExponential:
      return 1.0 / y;
    default:
      return 1.0 / d2p(conj_prime(y));
  }
}

double PenaltySpec::beta(double r) const {
  switch (kind_) {
    case PenaltyKind::kLogBarrier:
      return r;
    case PenaltyKind::kInversePoly:
      return std::pow(r, alpha_ + 1.0);
    default:
      return std::pow(r, kappa_);
  }
}

std::string PenaltySpec::name() const {
  switch (kind_) {
    case PenaltyKind::kLogBarrier: return "log";
    case PenaltyKind::kExponential: return "exp";
    case PenaltyKind::kSmoothedQuadratic: return "sq";
    case PenaltyKind::kInversePoly: {
      std::ostringstream os;
      os << "invpoly:" << alpha_;
      return os.str();
    }
  }
  return "unknown";
}

PenaltySpec make_penalty(PenaltyKind kind, double alpha, double kappa) {
  if (kind == PenaltyKind::kInversePoly && !(alpha > 0.0 && std::isfinite(alpha))) {
    std::ostringstream os;
    os << "inverse polynomial exponent must be positive, got " << alpha;
    throw Error(ErrorCode::kDomainError, os.str());
  }
  if (!(kappa > 0.0 && std::isfinite(kappa))) {
    std::ostringstream os;
    os << "decay exponent must be positive, got " << kappa;
    throw Error(ErrorCode::kDomainError, os.str());
  }
  PenaltySpec spec;
  spec.kind_ = kind;
  spec.alpha_ = kind == PenaltyKind::kInversePoly ? alpha : 1.0;
  spec.kappa_ = kappa;
  return spec;
}

PenaltySpec parse_penalty(std::string_view text, double kappa) {
  if (text == "log") return make_penalty(PenaltyKind::kLogBarrier, 1.0, kappa);
  if (text == "exp") return make_penalty(PenaltyKind::kExponential, 1.0, kappa);
  if (text == "sq") return make_penalty(PenaltyKind::kSmoothedQuadratic, 1.0, kappa);
  constexpr std::string_view kPrefix = "invpoly:";
  if (text.substr(0, kPrefix.size()) == kPrefix) {
    const std::string rest(text.substr(kPrefix.size()));
    char* end = nullptr;
    const double alpha = std::strtod(rest.c_str(), &end);
    if (!rest.empty() && end == rest.c_str() + rest.size()) {
      return make_penalty(PenaltyKind::kInversePoly, alpha, kappa);
    }
  }
  throw Error(ErrorCode::kInvalidInput,
              "unknown penalty '" + std::string(text) +
                  "' (expected log, exp, sq or invpoly:<alpha>)");
}

double conjugate_prime(const PenaltySpec& spec, double y) {
  if (!(y > 0.0) || !std::isfinite(y)) {
    std::ostringstream os;
    os << "q' is defined on (0, inf), got y = " << y;
    throw Error(ErrorCode::kDomainError, os.str());
  }
  return spec.conj_prime(y);
}

double verify_conjugacy(const PenaltySpec& spec, const std::vector<double>& grid) {
  double worst = 0.0;
  for (double y : grid) {
    const double x = conjugate_prime(spec, y);
    worst = std::max(worst, std::abs(spec.dp(x) - y));
    const double h = 1e-3 * y;
    const double fd = (-spec.conj_prime(y + 2 * h) + 8 * spec.conj_prime(y + h) -
                       8 * spec.conj_prime(y - h) + spec.conj_prime(y - 2 * h)) /
                      (12 * h);
    worst = std::max(worst, std::abs(spec.d2p(x) * fd - 1.0));
  }
  return worst;
}

}  // namespace lpdebias
