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

#ifndef APDESC_GRADCHECK_H_
#define APDESC_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace apdesc {

struct GradcheckResult {
  std::string name;
  double max_relative_error = 0;
  double tolerance = 0;
  std::size_t compared = 0;
  std::size_t kinks = 0;  // coordinates skipped because the step crossed a kink
  bool passed() const { return compared > 0 && max_relative_error <= tolerance; }
};

struct GradcheckOptions {
  std::uint64_t seed = 1;
  // Name of a check whose analytic gradient is deliberately perturbed, to
  // confirm that the harness catches a broken backward pass.
  std::string corrupt;
};

struct GradcheckEntry {
  std::string name;
  std::function<GradcheckResult(const GradcheckOptions&)> run;
};

// Finite-difference checks of every analytic gradient in the library.
const std::vector<GradcheckEntry>& GradcheckRegistry();

std::vector<GradcheckResult> RunGradchecks(const GradcheckOptions& options,
                                           const std::vector<std::string>& only = {});

// "check=<name> status=pass|fail max_rel_err=<e> tol=<t> compared=<n> kinks=<k>"
std::string FormatGradcheck(const GradcheckResult& r);

}  // namespace apdesc

#endif  // APDESC_GRADCHECK_H_
