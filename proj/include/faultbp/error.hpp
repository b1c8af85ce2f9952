// Copyright 2026 The faultbp Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace faultbp {

/// Machine-readable category carried by every library exception.
enum class ErrorCode {
  kDimensionMismatch,
  kInvalidArgument,
  kGridMismatch,
  kEmptySupport,
  kTooLarge,
  kNotConverged,
  kIo,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kGridMismatch: return "grid_mismatch";
    case ErrorCode::kEmptySupport: return "empty_support";
    case ErrorCode::kTooLarge: return "too_large";
    case ErrorCode::kNotConverged: return "not_converged";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace faultbp
