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

#include "apdesc/trainer.h"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "apdesc/error.h"
#include "apdesc/evaluation.h"

namespace apdesc {

namespace {

std::uint64_t PairKey(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

const char* ScheduleName(Schedule s) {
  return s == Schedule::kLinearToZero ? "linear" : "step";
}

Schedule ParseSchedule(const std::string& name) {
  if (name == "linear") return Schedule::kLinearToZero;
  if (name == "step") return Schedule::kStepDecay;
  Fail(ErrorCode::kConfig, "unknown schedule '" + name + "'");
}

double DefaultLearningRate(int batch_size) { return 0.1 * batch_size / 1024.0; }

void SgdConfig::Validate() const {
  Require(!lr0 || *lr0 >= 0, ErrorCode::kConfig, "sgd.lr0 must be non-negative");
  Require(momentum >= 0 && momentum < 1, ErrorCode::kConfig, "sgd.momentum must lie in [0, 1)");
  Require(weight_decay >= 0, ErrorCode::kConfig, "sgd.weight_decay must be non-negative");
  Require(epochs >= 1, ErrorCode::kConfig, "sgd.epochs must be positive");
  Require(step_every >= 1 && step_factor > 0, ErrorCode::kConfig, "bad step schedule");
}

double SgdConfig::BaseLearningRate(int batch_size) const {
  return lr0 ? *lr0 : DefaultLearningRate(batch_size);
}

double SgdConfig::LearningRate(int epoch, int batch_size) const {
  const double base = BaseLearningRate(batch_size);
  if (schedule == Schedule::kLinearToZero)
    return base * (1.0 - static_cast<double>(epoch) / epochs);
  return base / std::pow(step_factor, epoch / step_every);
}

SgdOptimizer::SgdOptimizer(const DescriptorModel& model, const SgdConfig& config)
    : config_(config),
      velocity_(model.num_params(), 0.0),
      scale_(model.num_params(), 1.0),
      decay_(model.num_params(), 0.0) {
  config_.Validate();
  for (const ParamSegment& s : model.segments())
    for (std::size_t i = s.offset; i < s.offset + s.size; ++i) {
      scale_[i] = s.lr_scale;
      decay_[i] = s.weight_decay ? config_.weight_decay : 0.0;
    }
}

void SgdOptimizer::Step(DescriptorModel& model, std::span<const double> grad, double lr) {
  Require(grad.size() == velocity_.size(), ErrorCode::kShape, "gradient size mismatch");
  std::span<double> w = model.mutable_params();
  for (std::size_t i = 0; i < w.size(); ++i) {
    velocity_[i] = config_.momentum * velocity_[i] - lr * scale_[i] * (grad[i] + decay_[i] * w[i]);
    w[i] += velocity_[i];
  }
}

DistractorIndex::DistractorIndex(const std::vector<DistractorSet>& sets) {
  for (const DistractorSet& s : sets)
    for (const auto& [a, b] : s.pairs) keys_.insert(PairKey(a, b));
}

bool DistractorIndex::contains(int a, int b) const { return keys_.contains(PairKey(a, b)); }

RelationMatrix MinedRelations(const PatchDataset& dataset, const std::vector<int>& patches,
                              const DistractorIndex& index) {
  const int m = static_cast<int>(patches.size());
  RelationMatrix rel(m, PairRelation::kIgnore);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      const int a = patches[i], b = patches[j];
      PairRelation r;
      if (dataset.patches[a].group == dataset.patches[b].group)
        r = PairRelation::kMatch;
      else if (dataset.sequence_of(a) != dataset.sequence_of(b) || index.contains(a, b))
        r = PairRelation::kNonMatch;
      else
        r = PairRelation::kIgnore;
      rel.set(i, j, r);
    }
  }
  return rel;
}

std::string FormatEpochRecord(const EpochRecord& r) {
  std::ostringstream os;
  os.precision(8);
  os << "epoch=" << r.epoch << " lr=" << r.lr << " loss=" << r.loss << " val_map=" << r.val_map
     << " wall_ms=" << r.wall_ms << " batches=" << r.batches
     << " triplets_per_batch=" << r.triplets_per_batch;
  return os.str();
}

TrainResult Train(DescriptorModel& model, const PatchDataset& train, const PatchDataset* validation,
                  const TrainConfig& config) {
  config.sgd.Validate();
  config.bins.Validate();
  Require(train.patch_size() == model.config().input_size(), ErrorCode::kConfig,
          "training patches are " + std::to_string(train.patch_size()) +
              " pixels but the model expects " + std::to_string(model.config().input_size()));
  Require(config.bins.code_length == model.output_dim(), ErrorCode::kConfig,
          "binning dimension does not match the descriptor dimension");
  Require((config.bins.kind == DistanceKind::kHamming) ==
              (model.config().head == Head::kTanhCode),
          ErrorCode::kConfig, "Hamming binning requires the tanh head and vice versa");

  std::mt19937_64 rng(config.sgd.seed);
  SgdOptimizer optimizer(model, config.sgd);
  DistractorIndex index;
  if (config.distractors != nullptr) index = DistractorIndex(*config.distractors);

  TrainResult result;
  for (int epoch = 0; epoch < config.sgd.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double lr = config.sgd.LearningRate(epoch, config.batch_size);
    std::vector<Batch> batches;
    switch (config.mode) {
      case BatchMode::kUniformGroups:
        batches = UniformGroupsEpoch(train, config.batch_size, rng);
        break;
      case BatchMode::kTwoSequence:
        batches = TwoSequenceEpoch(train, config.batch_size, rng);
        break;
      case BatchMode::kSmallDatasetCycling:
        batches = SmallDatasetEpoch(train, config.batch_size, config.epoch_batches, rng);
        break;
    }
    Require(!batches.empty(), ErrorCode::kConfig, "the sampler produced no batches");

    double loss_sum = 0, triplets = 0;
    for (const Batch& batch : batches) {
      std::vector<Image> inputs;
      EmbeddingBatch eb;
      for (int p : batch.patches) {
        const Image& raw = train.patches[p].image;
        inputs.push_back(NormalizeInput(config.augment ? Augment(raw, rng) : raw));
        eb.groups.push_back(train.patches[p].group);
      }
      const ForwardResult fwd = model.Forward(inputs);
      eb.values = fwd.embeddings;
      RelationMatrix relations;
      if (config.distractors != nullptr) relations = MinedRelations(train, batch.patches, index);
      const ApLossResult loss =
          ApLossBatch(eb, config.bins, config.distractors != nullptr ? &relations : nullptr);
      Require(std::isfinite(loss.loss), ErrorCode::kNumeric,
              "training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                  " (lr " + std::to_string(lr) + ")");
      const std::vector<double> grad = model.Backward(fwd.cache, loss.grad_embeddings);
      for (double g : grad)
        Require(std::isfinite(g), ErrorCode::kNumeric,
                "training diverged: non-finite gradient at epoch " + std::to_string(epoch));
      optimizer.Step(model, grad, lr);
      loss_sum += loss.loss;
      triplets += InducedTripletCount(train, batch);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.batches = static_cast<int>(batches.size());
    rec.loss = loss_sum / rec.batches;
    rec.triplets_per_batch = triplets / rec.batches;
    rec.val_map = std::numeric_limits<double>::quiet_NaN();
    if (validation != nullptr && !validation->patches.empty()) {
      const Matrix desc = ComputeDescriptors(model, *validation);
      rec.val_map = RetrievalMap(*validation, desc, DescriptorDistance(model)).metric("map");
    }
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    result.history.push_back(rec);
    if (config.on_epoch) config.on_epoch(rec);
  }
  return result;
}

}  // namespace apdesc
