//
// Copyright 2026 The Fairpremium Authors
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

#ifndef FAIRPREMIUM_ERRORS_HPP_
#define FAIRPREMIUM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace fairpremium {

// Thrown when inputs violate a documented precondition (bad ranges, missing
// columns, malformed files).  CLI maps this family to its own exit code so
// callers can distinguish operator mistakes from numerical failures.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a computation cannot continue: diverging optimization,
// singular correction systems, exhausted estimation paths.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Machine-checkable reason for a wire-format decode failure.
enum class CodecFault {
  kVersionMismatch,
  kTruncated,
  kCountMismatch,
};

class CodecError : public ValidationError {
 public:
  CodecError(CodecFault fault, const std::string& message)
      : ValidationError(message), fault_(fault) {}

  CodecFault fault() const { return fault_; }

 private:
  CodecFault fault_;
};

}  // namespace fairpremium

#endif  // FAIRPREMIUM_ERRORS_HPP_
