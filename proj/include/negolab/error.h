// Copyright 2026 The Negolab Authors
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

#ifndef NEGOLAB_ERROR_H_
#define NEGOLAB_ERROR_H_

#include <stdexcept>
#include <string>

namespace negolab {

enum class ErrorCode {
  kInvalidBoard,
  kInvalidCoalition,
  kPrecondition,
  kBudgetExceeded,
  kUnsupportedWeights,
  kDistributionInfeasible,
  kParse,
  kIllegalAction,
  kContract,
  kConfig,
  kTrainingFailure,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

// All recoverable failures in the library are reported with this type; the
// code lets callers and tests distinguish the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void Require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) Fail(code, what);
}

}  // namespace negolab

#endif  // NEGOLAB_ERROR_H_
