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

#ifndef LPDEBIAS_ERROR_HPP_
#define LPDEBIAS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace lpdebias {

enum class ErrorCode {
  kInvalidInput,
  kDomainError,
  kRankDeficient,
  kNumericalBreakdown,
  kAmbiguousZero,
  kDualInfeasibleStart,
  kDiverged,
  kDomainViolation,
  kUnbounded,
  kNonConvergence,
  kSingularKkt,
  kUnbalancedDemand,
  kImageMismatch,
  kUnsupportedPgm,
  kIoError,
  kProblemTooLarge,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception. The code identifies the
// failure class; what() carries the context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lpdebias

#endif  // LPDEBIAS_ERROR_HPP_
