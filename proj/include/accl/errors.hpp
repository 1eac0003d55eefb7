// Copyright 2025 The acclab Authors
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

#ifndef ACCL_ERRORS_HPP_
#define ACCL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace accl {

// Exit-code categories reported by the CLI on failure.
enum class ErrorCategory : int {
  kConfig = 1,       // bad config values, preconditions, shapes, indices
  kFormat = 2,       // malformed input files (IDX, CSV, JSON)
  kProtocol = 3,     // oracle misuse, budget violations, bad state
  kNumeric = 4,      // divergence, non-finite values
  kReport = 5,       // report generation failures
  kFeasibility = 6,  // instance exceeds a configured resource cap
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}
  ErrorCategory category() const { return category_; }
  int exit_code() const { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(ErrorCategory::kConfig, m) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error(ErrorCategory::kConfig, m) {}
};
struct IndexError : Error {
  explicit IndexError(const std::string& m) : Error(ErrorCategory::kConfig, m) {}
};
struct PreconditionError : Error {
  explicit PreconditionError(const std::string& m) : Error(ErrorCategory::kConfig, m) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& m) : Error(ErrorCategory::kFormat, m) {}
};
struct ProtocolError : Error {
  explicit ProtocolError(const std::string& m) : Error(ErrorCategory::kProtocol, m) {}
};
struct BudgetError : Error {
  explicit BudgetError(const std::string& m) : Error(ErrorCategory::kProtocol, m) {}
};
struct StateError : Error {
  explicit StateError(const std::string& m) : Error(ErrorCategory::kProtocol, m) {}
};
struct DivergenceError : Error {
  explicit DivergenceError(const std::string& m) : Error(ErrorCategory::kNumeric, m) {}
};
struct ReportError : Error {
  explicit ReportError(const std::string& m) : Error(ErrorCategory::kReport, m) {}
};
struct FeasibilityError : Error {
  explicit FeasibilityError(const std::string& m) : Error(ErrorCategory::kFeasibility, m) {}
};

}  // namespace accl

#endif  // ACCL_ERRORS_HPP_
