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

#ifndef APDESC_MINING_H_
#define APDESC_MINING_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "apdesc/checkpoint.h"
#include "apdesc/dataset.h"
#include "apdesc/image.h"

namespace apdesc {

struct MiningConfig {
  int clusters = 100;
  double percentile = 20;
  int hog_resize = 64;
  int hog_cell = 8;
  int raw_resize = 16;
  int max_iterations = 100;
  std::uint64_t seed = 1;

  void Validate() const;
  int feature_dim() const {
    const int cells = hog_resize / hog_cell;
    return cells * cells * 31 + raw_resize * raw_resize;
  }
};

// 31-channel gradient histogram per cell (18 signed orientations, 9
// unsigned orientations, 4 block energies) over the resized patch, followed
// by the raw pixels resized to raw_resize^2 and scaled to [0, 1].
std::vector<double> MiningFeature(const Image& patch, const MiningConfig& config = {});

struct KMeansResult {
  std::vector<int> assignments;
  Matrix centers;
  std::vector<double> distortion;  // after each assignment step
  int iterations = 0;
};

// k-means++ seeding followed by Lloyd iterations until the assignment stops
// changing. Empty clusters are moved to the point farthest from its center.
KMeansResult KMeans(const Matrix& features, int k, std::uint64_t seed, int max_iterations = 100);

// Nearest-rank percentile (p in [0, 100]) of a list of values.
double NearestRankPercentile(std::vector<double> values, double p);

struct DistractorSet {
  int sequence = 0;
  double threshold = 0;
  std::vector<std::pair<int, int>> pairs;  // patch indices, first < second, sorted
};

// Pairs of `patches` whose cluster centers lie farther apart than the p-th
// percentile of all center distances and whose groups differ.
DistractorSet MineDistractors(const PatchDataset& dataset, const std::vector<int>& patches,
                              const std::vector<int>& assignments, const Matrix& centers,
                              double percentile);

// Clusters every sequence independently and mines its distractors.
std::vector<DistractorSet> MineDataset(const PatchDataset& dataset, const MiningConfig& config);

// One file per sequence: a header echoing the config and threshold, then
// one "a b" line per pair. `echo` entries become "# config.<key> <value>".
void WriteDistractorFile(const std::string& path, const DistractorSet& set,
                         const MiningConfig& config, const std::string& sequence_name,
                         const ConfigEcho& echo = {});
DistractorSet ReadDistractorFile(const std::string& path);

}  // namespace apdesc

#endif  // APDESC_MINING_H_
