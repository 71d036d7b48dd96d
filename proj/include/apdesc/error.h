/*
 * Copyright 2026 The apdesc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef APDESC_ERROR_H_
#define APDESC_ERROR_H_

#include <stdexcept>
#include <string>

namespace apdesc {

enum class ErrorCode {
  kRange,
  kUndefinedMetric,
  kCapacity,
  kShape,
  kPrecondition,
  kNumeric,
  kConfig,
  kFormat,
  kContract,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type; the code
// lets callers (the CLI in particular) map failures to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

void LogWarning(const std::string& message);

}  // namespace apdesc

#endif  // APDESC_ERROR_H_
