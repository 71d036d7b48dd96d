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

#include "apdesc/heads.h"

#include <algorithm>

namespace apdesc {

namespace {
constexpr double kMinNorm = 1e-8;
}  // namespace

NormalizedRows L2NormalizeRows(const Matrix& raw) {
  NormalizedRows out;
  out.unit.resize(raw.rows(), raw.cols());
  out.norms.resize(raw.rows());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const double norm = std::max(raw.row(i).stableNorm(), kMinNorm);
    out.norms[i] = norm;
    out.unit.row(i) = raw.row(i) / norm;
  }
  return out;
}

Matrix L2NormalizeBackward(const NormalizedRows& forward, const Matrix& grad_unit) {
  Matrix out(grad_unit.rows(), grad_unit.cols());
  for (Eigen::Index i = 0; i < grad_unit.rows(); ++i) {
    const auto f = forward.unit.row(i);
    const double along = f.dot(grad_unit.row(i));
    out.row(i) = (grad_unit.row(i) - along * f) / forward.norms[i];
  }
  return out;
}

Matrix TanhRows(const Matrix& activations) { return activations.array().tanh().matrix(); }

Matrix TanhBackward(const Matrix& codes, const Matrix& grad_codes) {
  return (grad_codes.array() * (1.0 - codes.array().square())).matrix();
}

Matrix Binarize(const Matrix& codes) {
  return codes.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
}

}  // namespace apdesc
