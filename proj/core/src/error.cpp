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

#include "lpdebias/error.hpp"

namespace lpdebias {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kNumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::kAmbiguousZero: return "AmbiguousZero";
    case ErrorCode::kDualInfeasibleStart: return "DualInfeasibleStart";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kDomainViolation: return "DomainViolation";
    case ErrorCode::kUnbounded: return "Unbounded";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kSingularKkt: return "SingularKkt";
    case ErrorCode::kUnbalancedDemand: return "UnbalancedDemand";
    case ErrorCode::kImageMismatch: return "ImageMismatch";
    case ErrorCode::kUnsupportedPgm: return "UnsupportedPgm";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kProblemTooLarge: return "ProblemTooLarge";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace lpdebias
