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

#ifndef APDESC_SYNTHETIC_H_
#define APDESC_SYNTHETIC_H_

#include <cstdint>

#include "apdesc/dataset.h"

namespace apdesc {

struct SyntheticConfig {
  int num_sequences = 20;
  int groups_per_sequence = 50;
  int group_size = 4;
  int patch_size = 32;
  // Plane waves summed into each group texture, and their frequency range
  // in radians per pixel.
  int texture_waves = 8;
  double min_frequency = 0.15;
  double max_frequency = 0.7;
  // Amplitude of a texture shared by all groups of a sequence.
  double sequence_texture = 0.5;
  // Per-view affine jitter: rotation in radians, log-scale, translation in
  // normalized coordinates, all scaled by this magnitude.
  double warp = 0.03;
  // Per-view photometric jitter: gain, offset, illumination gradient and
  // pixel noise, all scaled by this magnitude.
  double jitter = 1.0;
  int held_out_sequences = 5;  // the last sequences get the test split
  std::uint64_t seed = 1;

  void Validate() const;
};

PatchDataset GenerateSynthetic(const SyntheticConfig& config);

}  // namespace apdesc

#endif  // APDESC_SYNTHETIC_H_
