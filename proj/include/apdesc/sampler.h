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

#ifndef APDESC_SAMPLER_H_
#define APDESC_SAMPLER_H_

#include <cstdint>
#include <random>
#include <vector>

#include "apdesc/dataset.h"
#include "apdesc/image.h"

namespace apdesc {

enum class BatchMode { kUniformGroups, kTwoSequence, kSmallDatasetCycling };

const char* BatchModeName(BatchMode m);
BatchMode ParseBatchMode(const std::string& name);

// Whole groups; patches listed group by group.
struct Batch {
  std::vector<int> groups;
  std::vector<int> patches;
};

// Groups usable for training: at least two members, so every patch has an
// in-batch match.
std::vector<int> TrainableGroups(const PatchDataset& dataset);

// Adds groups from `candidates` (in order) while they fit into `capacity`
// patches; returns the number consumed. A group that does not fit stops the
// fill, leaving the remaining capacity unused.
std::size_t FillBatch(const PatchDataset& dataset, const std::vector<int>& candidates,
                      std::size_t start, int capacity, Batch& batch);

// One batch of uniformly drawn whole groups.
Batch SampleUniformGroups(const PatchDataset& dataset, int batch_size, std::mt19937_64& rng);

// One pass over a random permutation of the groups.
std::vector<Batch> UniformGroupsEpoch(const PatchDataset& dataset, int batch_size,
                                      std::mt19937_64& rng);

// Half of the batch from each of two sequences.
Batch SampleTwoSequence(const PatchDataset& dataset, int first, int second, int batch_size,
                        std::mt19937_64& rng);

// One batch per unordered sequence pair, in lexicographic pair order. Pairs
// with a sequence unable to fill its half are skipped with a warning.
std::vector<Batch> TwoSequenceEpoch(const PatchDataset& dataset, int batch_size,
                                    std::mt19937_64& rng);

// Batch k starts with trainable group k mod G and is filled with random
// other groups.
Batch SampleSmallDataset(const PatchDataset& dataset, int batch_size, int k,
                         std::mt19937_64& rng);
std::vector<Batch> SmallDatasetEpoch(const PatchDataset& dataset, int batch_size,
                                     int epoch_batches, std::mt19937_64& rng);

// Uniformly chosen dihedral image of a square patch.
Image Augment(const Image& patch, std::mt19937_64& rng);

// Triplets induced by a batch: every patch of a group of size n contributes
// (n - 1) * (M - n) (positive, negative) pairs, M the batch size.
double InducedTripletCount(const PatchDataset& dataset, const Batch& batch);

}  // namespace apdesc

#endif  // APDESC_SAMPLER_H_
