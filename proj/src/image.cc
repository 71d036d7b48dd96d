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

#include "apdesc/image.h"

#include <algorithm>
#include <cmath>

#include "apdesc/error.h"

namespace apdesc {

Image ResizeBilinear(const Image& src, int rows, int cols) {
  Require(!src.empty() && rows > 0 && cols > 0, ErrorCode::kShape,
          "resize of empty image or to empty size");
  if (src.rows == rows && src.cols == cols) return src;
  Image out(rows, cols);
  const double sy = static_cast<double>(src.rows) / rows;
  const double sx = static_cast<double>(src.cols) / cols;
  for (int r = 0; r < rows; ++r) {
    double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, src.rows - 1.0);
    int y0 = std::min(static_cast<int>(fy), src.rows - 1);
    int y1 = std::min(y0 + 1, src.rows - 1);
    double wy = fy - y0;
    for (int c = 0; c < cols; ++c) {
      double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, src.cols - 1.0);
      int x0 = std::min(static_cast<int>(fx), src.cols - 1);
      int x1 = std::min(x0 + 1, src.cols - 1);
      double wx = fx - x0;
      double top = (1 - wx) * src.at(y0, x0) + wx * src.at(y0, x1);
      double bottom = (1 - wx) * src.at(y1, x0) + wx * src.at(y1, x1);
      out.at(r, c) = (1 - wy) * top + wy * bottom;
    }
  }
  return out;
}

Image ApplyDihedral(const Image& src, int element) {
  Require(src.rows == src.cols, ErrorCode::kShape,
          "dihedral transforms need a square image");
  Require(element >= 0 && element < 8, ErrorCode::kRange,
          "dihedral element must be in [0, 8)");
  const int n = src.rows;
  Image cur = src;
  if (element >= 4) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) cur.at(r, c) = src.at(r, n - 1 - c);
  }
  for (int turn = 0; turn < element % 4; ++turn) {
    Image next(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) next.at(r, c) = cur.at(c, n - 1 - r);
    cur = std::move(next);
  }
  return cur;
}

double MinPixel(const Image& image) {
  return *std::min_element(image.pixels.begin(), image.pixels.end());
}

double MaxPixel(const Image& image) {
  return *std::max_element(image.pixels.begin(), image.pixels.end());
}

}  // namespace apdesc
