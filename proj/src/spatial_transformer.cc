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

#include "apdesc/spatial_transformer.h"

#include <algorithm>
#include <cmath>

#include "apdesc/error.h"

namespace apdesc {

namespace {

double LatticeCoordinate(int i, int size) {
  return size == 1 ? 0.0 : -1.0 + 2.0 * i / (size - 1);
}

// Position along one axis of length `size`, clamped for replicate padding.
struct AxisSample {
  int lo;
  int hi;
  double weight;   // weight of `hi`
  double d_coord;  // d(pixel position)/d(normalized coordinate), 0 if clamped
};

AxisSample LocateAxis(double coord, int size) {
  if (size == 1) return {0, 0, 0.0, 0.0};
  const double scale = 0.5 * (size - 1);
  const double pos = (coord + 1.0) * scale;
  if (pos < 0.0) return {0, 0, 0.0, 0.0};
  if (pos > size - 1) return {size - 1, size - 1, 0.0, 0.0};
  const int lo = std::min(static_cast<int>(std::floor(pos)), size - 2);
  return {lo, lo + 1, pos - lo, scale};
}

}  // namespace

SamplingGrid AffineGrid(const AffineParams& params, int out_size) {
  Require(out_size >= 1, ErrorCode::kShape, "grid size must be positive");
  const auto& t = params.theta;
  for (double v : t) Require(std::isfinite(v), ErrorCode::kNumeric, "non-finite theta");
  SamplingGrid grid;
  grid.size = out_size;
  const std::size_t n = static_cast<std::size_t>(out_size) * out_size;
  grid.out_x.resize(n);
  grid.out_y.resize(n);
  grid.in_x.resize(n);
  grid.in_y.resize(n);
  for (int r = 0; r < out_size; ++r) {
    for (int c = 0; c < out_size; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * out_size + c;
      const double x = LatticeCoordinate(c, out_size);
      const double y = LatticeCoordinate(r, out_size);
      grid.out_x[i] = x;
      grid.out_y[i] = y;
      grid.in_x[i] = t[0] * x + t[1] * y + t[2];
      grid.in_y[i] = t[3] * x + t[4] * y + t[5];
    }
  }
  return grid;
}

Image SampleReplicate(const Image& image, const SamplingGrid& grid) {
  Require(!image.empty(), ErrorCode::kShape, "cannot sample an empty image");
  Image out(grid.size, grid.size);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const AxisSample ax = LocateAxis(grid.in_x[i], image.cols);
    const AxisSample ay = LocateAxis(grid.in_y[i], image.rows);
    // a + w (b - a) rather than (1 - w) a + w b: exact when a == b, so
    // constant regions stay bit-identical.
    auto lerp = [](double a, double b, double w) { return a + w * (b - a); };
    const double top = lerp(image.at(ay.lo, ax.lo), image.at(ay.lo, ax.hi), ax.weight);
    const double bottom = lerp(image.at(ay.hi, ax.lo), image.at(ay.hi, ax.hi), ax.weight);
    out.pixels[i] = lerp(top, bottom, ay.weight);
  }
  return out;
}

SampleGradients SampleBackward(const Image& image, const SamplingGrid& grid,
                               const Image& upstream) {
  Require(upstream.rows == grid.size && upstream.cols == grid.size, ErrorCode::kShape,
          "upstream gradient does not match the sampling grid");
  SampleGradients out;
  out.grad_image = Image(image.rows, image.cols);
  for (std::size_t i = 0; i < upstream.pixels.size(); ++i) {
    const double g = upstream.pixels[i];
    if (g == 0.0) continue;
    const AxisSample ax = LocateAxis(grid.in_x[i], image.cols);
    const AxisSample ay = LocateAxis(grid.in_y[i], image.rows);
    const double wx = ax.weight, wy = ay.weight;
    out.grad_image.at(ay.lo, ax.lo) += g * (1 - wx) * (1 - wy);
    out.grad_image.at(ay.lo, ax.hi) += g * wx * (1 - wy);
    out.grad_image.at(ay.hi, ax.lo) += g * (1 - wx) * wy;
    out.grad_image.at(ay.hi, ax.hi) += g * wx * wy;

    const double d_wx = (1 - wy) * (image.at(ay.lo, ax.hi) - image.at(ay.lo, ax.lo)) +
                        wy * (image.at(ay.hi, ax.hi) - image.at(ay.hi, ax.lo));
    const double d_wy = (1 - wx) * (image.at(ay.hi, ax.lo) - image.at(ay.lo, ax.lo)) +
                        wx * (image.at(ay.hi, ax.hi) - image.at(ay.lo, ax.hi));
    const double gx = g * d_wx * ax.d_coord;
    const double gy = g * d_wy * ay.d_coord;
    out.grad_theta[0] += gx * grid.out_x[i];
    out.grad_theta[1] += gx * grid.out_y[i];
    out.grad_theta[2] += gx;
    out.grad_theta[3] += gy * grid.out_x[i];
    out.grad_theta[4] += gy * grid.out_y[i];
    out.grad_theta[5] += gy;
  }
  return out;
}

}  // namespace apdesc
