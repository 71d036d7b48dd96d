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

#ifndef APDESC_TRAINER_H_
#define APDESC_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "apdesc/ap_relax.h"
#include "apdesc/dataset.h"
#include "apdesc/mining.h"
#include "apdesc/model.h"
#include "apdesc/sampler.h"

namespace apdesc {

enum class Schedule { kLinearToZero, kStepDecay };

const char* ScheduleName(Schedule s);
Schedule ParseSchedule(const std::string& name);

// 0.1 at M = 1024, scaled linearly with the batch size.
double DefaultLearningRate(int batch_size);

struct SgdConfig {
  std::optional<double> lr0;  // DefaultLearningRate(batch size) when unset
  double momentum = 0.9;
  double weight_decay = 1e-4;
  Schedule schedule = Schedule::kLinearToZero;
  int epochs = 100;
  int step_every = 10;
  double step_factor = 10;
  std::uint64_t seed = 1;

  void Validate() const;
  double BaseLearningRate(int batch_size) const;
  // Linear: lr0 * (1 - e / epochs). Step: lr0 / step_factor^floor(e / step_every).
  double LearningRate(int epoch, int batch_size) const;
};

// Heavy-ball SGD with weight decay folded into the gradient:
//   v <- momentum * v - lr * scale * (g + decay * w),  w <- w + v
// where scale and decay come from each parameter segment.
class SgdOptimizer {
 public:
  SgdOptimizer(const DescriptorModel& model, const SgdConfig& config);

  void Step(DescriptorModel& model, std::span<const double> grad, double lr);

  // The update v applied by the most recent Step.
  const std::vector<double>& last_update() const { return velocity_; }

 private:
  SgdConfig config_;
  std::vector<double> velocity_;
  std::vector<double> scale_;
  std::vector<double> decay_;
};

// Unordered in-sequence distractor pairs, looked up in O(1).
class DistractorIndex {
 public:
  DistractorIndex() = default;
  explicit DistractorIndex(const std::vector<DistractorSet>& sets);
  bool contains(int a, int b) const;
  std::size_t size() const { return keys_.size(); }

 private:
  std::unordered_set<std::uint64_t> keys_;
};

// Same group: match. Different sequences: non-match. Same sequence,
// different group: non-match only when mined as a distractor pair.
RelationMatrix MinedRelations(const PatchDataset& dataset, const std::vector<int>& patches,
                              const DistractorIndex& index);

struct EpochRecord {
  int epoch = 0;
  double lr = 0;
  double loss = 0;     // mean over the epoch's batches
  double val_map = 0;  // NaN without a validation set
  double wall_ms = 0;
  int batches = 0;
  double triplets_per_batch = 0;
};

std::string FormatEpochRecord(const EpochRecord& r);

struct TrainConfig {
  SgdConfig sgd;
  BatchMode mode = BatchMode::kUniformGroups;
  int batch_size = 64;
  BinningConfig bins = BinningConfig::Euclidean(16, 25);
  bool augment = true;
  int epoch_batches = 1000;
  // Mined in-sequence distractors; when set, unmined in-sequence pairs are
  // left out of the loss.
  const std::vector<DistractorSet>* distractors = nullptr;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> history;
};

// Runs the configured number of epochs. Throws a numeric error if the loss
// stops being finite.
TrainResult Train(DescriptorModel& model, const PatchDataset& train, const PatchDataset* validation,
                  const TrainConfig& config);

}  // namespace apdesc

#endif  // APDESC_TRAINER_H_
