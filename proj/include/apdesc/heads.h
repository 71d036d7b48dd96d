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

#ifndef APDESC_HEADS_H_
#define APDESC_HEADS_H_

#include <vector>

#include "apdesc/image.h"

namespace apdesc {

// F = F0 / ||F0|| row by row, with ||F0|| clamped below at 1e-8.
struct NormalizedRows {
  Matrix unit;
  std::vector<double> norms;
};

NormalizedRows L2NormalizeRows(const Matrix& raw);

// dL/dF0 = (1 / ||F0||) [dL/dF - F (F^T dL/dF)], row by row.
Matrix L2NormalizeBackward(const NormalizedRows& forward, const Matrix& grad_unit);

// Elementwise tanh relaxation of sign codes and its backward pass.
Matrix TanhRows(const Matrix& activations);
Matrix TanhBackward(const Matrix& codes, const Matrix& grad_codes);

// Elementwise sign with sign(0) = +1.
Matrix Binarize(const Matrix& codes);

}  // namespace apdesc

#endif  // APDESC_HEADS_H_
