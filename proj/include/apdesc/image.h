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

#ifndef APDESC_IMAGE_H_
#define APDESC_IMAGE_H_

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace apdesc {

// Row-major dense matrix used for embedding batches (one row per patch).
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Single-channel image with row-major pixel storage.
struct Image {
  int rows = 0;
  int cols = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int r, int c, double fill = 0.0)
      : rows(r), cols(c), pixels(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return pixels[static_cast<std::size_t>(r) * cols + c];
  }
  std::size_t size() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }

  bool operator==(const Image&) const = default;
};

// Bilinear resize using pixel-center alignment (the OpenCV INTER_LINEAR
// convention without area averaging). All loaders and the mining features
// use this one routine.
Image ResizeBilinear(const Image& src, int rows, int cols);

// Elements of the dihedral group of the square: rotation by 90*(e % 4)
// degrees counter-clockwise, preceded by a horizontal flip when e >= 4.
Image ApplyDihedral(const Image& src, int element);

double MinPixel(const Image& image);
double MaxPixel(const Image& image);

}  // namespace apdesc

#endif  // APDESC_IMAGE_H_
