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

#ifndef APDESC_DATASET_H_
#define APDESC_DATASET_H_

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "apdesc/image.h"

namespace apdesc {

enum class Split { kTrain, kVal, kTest };

const char* SplitName(Split s);
Split ParseSplit(const std::string& name);

struct Patch {
  Image image;
  int group = 0;
  std::string tier;  // variant tag from the source file name, may be empty
};

// Patches depicting the same 3D point.
struct Group {
  std::int64_t label = 0;  // identifier from the source data
  int sequence = 0;
  std::vector<int> patches;
};

struct Sequence {
  std::string name;
  std::string tag;  // e.g. "viewpoint" / "illumination"; may be empty
  Split split = Split::kTrain;
  std::vector<int> groups;
};

struct PatchDataset {
  std::vector<Patch> patches;
  std::vector<Group> groups;
  std::vector<Sequence> sequences;

  // Checks the cross-references: every patch in exactly one group, every
  // group in exactly one sequence, no empty groups, one patch size.
  void Validate() const;

  int sequence_of(int patch) const { return groups[patches[patch].group].sequence; }
  int max_group_size() const;
  int patch_size() const { return patches.empty() ? 0 : patches[0].image.rows; }

  // Sequences whose split is in `splits`, re-indexed. Sequence, group and
  // patch order are preserved.
  PatchDataset Select(const std::set<Split>& splits) const;
};

// Appends a new group holding `images` to sequence `sequence`.
int AddGroup(PatchDataset& dataset, int sequence, std::int64_t label,
             std::vector<Image> images, const std::vector<std::string>& tiers = {});

// Directory holding `info.txt` (one line per patch, first token the 3D point
// id) and mosaics patches0000.bmp, patches0001.bmp, ... of 16x16 tiles of
// 64x64 pixels, read row-major. The whole set is one sequence.
PatchDataset LoadUbc(const std::string& dir, int target_size = 32);

// Directory of sequence subdirectories, each with image files of vertically
// stacked 65x65 patches (one file per variant). Group g collects row g from
// every file. Sequences named in `test_sequences` get the test split.
PatchDataset LoadHpatches(const std::string& dir, int target_size = 32,
                          const std::set<std::string>& test_sequences = {});

// Binary container: a text header (patch geometry, sequence table, group
// table) followed by one byte per pixel. Pixels are rounded and clamped to
// [0, 255] on save.
void SaveDataset(const std::string& path, const PatchDataset& dataset);
PatchDataset LoadDataset(const std::string& path);

}  // namespace apdesc

#endif  // APDESC_DATASET_H_
