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

#ifndef APDESC_SPATIAL_TRANSFORMER_H_
#define APDESC_SPATIAL_TRANSFORMER_H_

#include <array>
#include <vector>

#include "apdesc/image.h"

namespace apdesc {

// 2x3 affine map from output normalized coordinates (x, y, 1) to input
// normalized coordinates, stored row-major: [t0 t1 t2; t3 t4 t5].
struct AffineParams {
  std::array<double, 6> theta = {1, 0, 0, 0, 1, 0};

  static AffineParams Identity() { return {}; }
  bool operator==(const AffineParams&) const = default;
};

struct STConfig {
  int input_size = 42;
  int output_size = 32;
  double localization_lr_scale = 0.01;
};

// Output lattice coordinates and the input coordinates they map to. The
// normalized range [-1, 1] spans the centers of the first and last pixels.
struct SamplingGrid {
  int size = 0;
  std::vector<double> out_x, out_y;
  std::vector<double> in_x, in_y;
};

SamplingGrid AffineGrid(const AffineParams& params, int out_size);

// Bilinear sampling. Coordinates outside the image read the nearest border
// pixel (replicate padding), never zero.
Image SampleReplicate(const Image& image, const SamplingGrid& grid);

struct SampleGradients {
  Image grad_image;
  std::array<double, 6> grad_theta{};
};

// Backward pass of SampleReplicate composed with AffineGrid. Along an axis
// whose coordinate was clamped to the border the spatial gradient is zero.
SampleGradients SampleBackward(const Image& image, const SamplingGrid& grid,
                               const Image& upstream);

}  // namespace apdesc

#endif  // APDESC_SPATIAL_TRANSFORMER_H_
