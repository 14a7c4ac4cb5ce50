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

#include "negolab/error.h"

namespace negolab {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidBoard: return "invalid-board";
    case ErrorCode::kInvalidCoalition: return "invalid-coalition";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kBudgetExceeded: return "budget-exceeded";
    case ErrorCode::kUnsupportedWeights: return "unsupported-weights";
    case ErrorCode::kDistributionInfeasible: return "distribution-infeasible";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIllegalAction: return "illegal-action";
    case ErrorCode::kContract: return "contract";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kTrainingFailure: return "training-failure";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace negolab
