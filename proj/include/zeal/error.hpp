//
// Copyright 2026 The Zeal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace zeal {

enum class ErrorCode {
  kNonFiniteInput,
  kSubnormalInput,
  kNonPositiveInput,
  kEmptyDataset,
  kInvalidEpsilon,
  kInvalidRange,
  kOverflowingBias,
  kOutOfDomain,
  kInvalidProbability,
  kExponentTooSmall,
  kExponentTooSmallForIeee,
  kZeroDenominator,
  kNoFeasibleExponent,
  kZeroSum,
  kZeroTrueAverage,
  kLengthMismatch,
  kWindowTooLarge,
  kInvalidPlan,
  kSampleOutsidePlan,
  kInvalidFrame,
  kFileNotFound,
  kNonNumericCell,
  kOutOfFeasible,
  kConfigError,
  kExternalCompressor,
};

constexpr std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kSubnormalInput: return "SubnormalInput";
    case ErrorCode::kNonPositiveInput: return "NonPositiveInput";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kInvalidEpsilon: return "InvalidEpsilon";
    case ErrorCode::kInvalidRange: return "InvalidRange";
    case ErrorCode::kOverflowingBias: return "OverflowingBias";
    case ErrorCode::kOutOfDomain: return "OutOfDomain";
    case ErrorCode::kInvalidProbability: return "InvalidProbability";
    case ErrorCode::kExponentTooSmall: return "ExponentTooSmall";
    case ErrorCode::kExponentTooSmallForIeee: return "ExponentTooSmallForIEEE";
    case ErrorCode::kZeroDenominator: return "ZeroDenominator";
    case ErrorCode::kNoFeasibleExponent: return "NoFeasibleExponent";
    case ErrorCode::kZeroSum: return "ZeroSum";
    case ErrorCode::kZeroTrueAverage: return "ZeroTrueAverage";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kWindowTooLarge: return "WindowTooLarge";
    case ErrorCode::kInvalidPlan: return "InvalidPlan";
    case ErrorCode::kSampleOutsidePlan: return "SampleOutsidePlan";
    case ErrorCode::kInvalidFrame: return "InvalidFrame";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kNonNumericCell: return "NonNumericCell";
    case ErrorCode::kOutOfFeasible: return "OutOfFeasible";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kExternalCompressor: return "ExternalCompressor";
  }
  return "Unknown";
}

// Single exception type for the library. `index` carries the offending
// element or row where one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace zeal
