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

#include "apdesc/error.h"

#include <iostream>

namespace apdesc {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRange:
      return "range error";
    case ErrorCode::kUndefinedMetric:
      return "undefined metric";
    case ErrorCode::kCapacity:
      return "capacity error";
    case ErrorCode::kShape:
      return "shape error";
    case ErrorCode::kPrecondition:
      return "precondition error";
    case ErrorCode::kNumeric:
      return "numeric error";
    case ErrorCode::kConfig:
      return "config error";
    case ErrorCode::kFormat:
      return "format error";
    case ErrorCode::kContract:
      return "contract error";
  }
  return "error";
}

void LogWarning(const std::string& message) {
  std::cerr << "warning: " << message << "\n";
}

}  // namespace apdesc
