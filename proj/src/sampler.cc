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

#include "apdesc/sampler.h"

#include <algorithm>
#include <numeric>

#include "apdesc/error.h"

namespace apdesc {

namespace {

void RequireCapacity(const PatchDataset& dataset, int batch_size) {
  Require(batch_size >= 2 * dataset.max_group_size(), ErrorCode::kConfig,
          "batch size " + std::to_string(batch_size) +
              " is below twice the largest group (" +
              std::to_string(dataset.max_group_size()) + ")");
}

std::vector<int> SequenceGroups(const PatchDataset& dataset, int s) {
  std::vector<int> out;
  for (int g : dataset.sequences[s].groups)
    if (dataset.groups[g].patches.size() >= 2) out.push_back(g);
  return out;
}

int PatchCount(const PatchDataset& dataset, const std::vector<int>& groups) {
  int n = 0;
  for (int g : groups) n += static_cast<int>(dataset.groups[g].patches.size());
  return n;
}

}  // namespace

const char* BatchModeName(BatchMode m) {
  switch (m) {
    case BatchMode::kUniformGroups:
      return "uniform";
    case BatchMode::kTwoSequence:
      return "two_sequence";
    case BatchMode::kSmallDatasetCycling:
      return "small_dataset";
  }
  return "?";
}

BatchMode ParseBatchMode(const std::string& name) {
  for (BatchMode m :
       {BatchMode::kUniformGroups, BatchMode::kTwoSequence, BatchMode::kSmallDatasetCycling})
    if (name == BatchModeName(m)) return m;
  Fail(ErrorCode::kConfig, "unknown batch mode '" + name + "'");
}

std::vector<int> TrainableGroups(const PatchDataset& dataset) {
  std::vector<int> out;
  for (std::size_t g = 0; g < dataset.groups.size(); ++g)
    if (dataset.groups[g].patches.size() >= 2) out.push_back(static_cast<int>(g));
  return out;
}

std::size_t FillBatch(const PatchDataset& dataset, const std::vector<int>& candidates,
                      std::size_t start, int capacity, Batch& batch) {
  std::size_t used = 0;
  int size = 0;
  for (std::size_t k = start; k < candidates.size(); ++k) {
    const Group& g = dataset.groups[candidates[k]];
    if (size + static_cast<int>(g.patches.size()) > capacity) break;
    size += static_cast<int>(g.patches.size());
    batch.groups.push_back(candidates[k]);
    batch.patches.insert(batch.patches.end(), g.patches.begin(), g.patches.end());
    ++used;
  }
  return used;
}

Batch SampleUniformGroups(const PatchDataset& dataset, int batch_size, std::mt19937_64& rng) {
  RequireCapacity(dataset, batch_size);
  std::vector<int> groups = TrainableGroups(dataset);
  std::shuffle(groups.begin(), groups.end(), rng);
  Batch batch;
  FillBatch(dataset, groups, 0, batch_size, batch);
  return batch;
}

std::vector<Batch> UniformGroupsEpoch(const PatchDataset& dataset, int batch_size,
                                      std::mt19937_64& rng) {
  RequireCapacity(dataset, batch_size);
  std::vector<int> groups = TrainableGroups(dataset);
  std::shuffle(groups.begin(), groups.end(), rng);
  std::vector<Batch> out;
  for (std::size_t start = 0; start < groups.size();) {
    Batch batch;
    start += FillBatch(dataset, groups, start, batch_size, batch);
    if (batch.groups.size() >= 2) out.push_back(std::move(batch));
  }
  return out;
}

Batch SampleTwoSequence(const PatchDataset& dataset, int first, int second, int batch_size,
                        std::mt19937_64& rng) {
  RequireCapacity(dataset, batch_size);
  Batch batch;
  for (int s : {first, second}) {
    std::vector<int> groups = SequenceGroups(dataset, s);
    std::shuffle(groups.begin(), groups.end(), rng);
    FillBatch(dataset, groups, 0, batch_size / 2, batch);
  }
  return batch;
}

std::vector<Batch> TwoSequenceEpoch(const PatchDataset& dataset, int batch_size,
                                    std::mt19937_64& rng) {
  RequireCapacity(dataset, batch_size);
  const int s_count = static_cast<int>(dataset.sequences.size());
  Require(s_count >= 2, ErrorCode::kConfig, "two-sequence batches need at least two sequences");
  std::vector<bool> usable(s_count);
  for (int s = 0; s < s_count; ++s) {
    usable[s] = PatchCount(dataset, SequenceGroups(dataset, s)) >= batch_size / 2;
    if (!usable[s])
      LogWarning("sequence '" + dataset.sequences[s].name +
                 "' cannot fill half a batch; its pairs are skipped");
  }
  std::vector<Batch> out;
  for (int a = 0; a < s_count; ++a)
    for (int b = a + 1; b < s_count; ++b)
      if (usable[a] && usable[b]) out.push_back(SampleTwoSequence(dataset, a, b, batch_size, rng));
  return out;
}

Batch SampleSmallDataset(const PatchDataset& dataset, int batch_size, int k,
                         std::mt19937_64& rng) {
  RequireCapacity(dataset, batch_size);
  const std::vector<int> groups = TrainableGroups(dataset);
  Require(!groups.empty(), ErrorCode::kConfig, "no group has two patches");
  const int first = groups[static_cast<std::size_t>(k) % groups.size()];
  std::vector<int> order = {first};
  std::vector<int> rest;
  for (int g : groups)
    if (g != first) rest.push_back(g);
  std::shuffle(rest.begin(), rest.end(), rng);
  order.insert(order.end(), rest.begin(), rest.end());
  Batch batch;
  FillBatch(dataset, order, 0, batch_size, batch);
  return batch;
}

std::vector<Batch> SmallDatasetEpoch(const PatchDataset& dataset, int batch_size,
                                     int epoch_batches, std::mt19937_64& rng) {
  Require(epoch_batches >= 1, ErrorCode::kConfig, "epoch_batches must be positive");
  std::vector<Batch> out;
  for (int k = 0; k < epoch_batches; ++k)
    out.push_back(SampleSmallDataset(dataset, batch_size, k, rng));
  return out;
}

Image Augment(const Image& patch, std::mt19937_64& rng) {
  return ApplyDihedral(patch, static_cast<int>(rng() % 8));
}

double InducedTripletCount(const PatchDataset& dataset, const Batch& batch) {
  const double m = static_cast<double>(batch.patches.size());
  double total = 0;
  for (int g : batch.groups) {
    const double n = static_cast<double>(dataset.groups[g].patches.size());
    total += n * (n - 1) * (m - n);
  }
  return total;
}

}  // namespace apdesc
