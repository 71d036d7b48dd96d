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

#include <cmath>

#include <gtest/gtest.h>

#include "apdesc/error.h"
#include "apdesc/evaluation.h"
#include "apdesc/synthetic.h"

namespace apdesc {
namespace {

SyntheticConfig Fixture(int sequences, int groups, std::uint64_t seed) {
  SyntheticConfig c;
  c.num_sequences = sequences;
  c.groups_per_sequence = groups;
  c.held_out_sequences = 1;
  c.seed = seed;
  return c;
}

ModelConfig LinearModel(int dim) {
  ModelConfig m;
  m.output_dim = dim;
  return m;
}

TrainConfig BasicTraining(int dim, int epochs, int batch = 32) {
  TrainConfig t;
  t.sgd.epochs = epochs;
  t.batch_size = batch;
  t.bins = BinningConfig::Euclidean(dim, 10);
  return t;
}

TEST(ScheduleTest, LinearToZero) {
  SgdConfig c;
  c.lr0 = 0.3;
  c.epochs = 7;
  for (int e = 0; e < 7; ++e) EXPECT_EQ(c.LearningRate(e, 64), 0.3 * (1.0 - e / 7.0));
}

TEST(ScheduleTest, StepDecayDividesByTenEveryTenEpochs) {
  SgdConfig c;
  c.lr0 = 0.1;
  c.schedule = Schedule::kStepDecay;
  c.epochs = 32;
  EXPECT_DOUBLE_EQ(c.LearningRate(0, 64), 0.1);
  EXPECT_DOUBLE_EQ(c.LearningRate(9, 64), 0.1);
  EXPECT_DOUBLE_EQ(c.LearningRate(10, 64), 0.01);
  EXPECT_DOUBLE_EQ(c.LearningRate(31, 64), 0.0001);
}

TEST(ScheduleTest, DefaultRateScalesWithBatchSize) {
  EXPECT_DOUBLE_EQ(DefaultLearningRate(1024), 0.1);
  EXPECT_DOUBLE_EQ(DefaultLearningRate(256), 0.025);
  SgdConfig c;
  EXPECT_DOUBLE_EQ(c.BaseLearningRate(64), 0.1 * 64 / 1024);
}

TEST(OptimizerTest, HeavyBallWithFoldedWeightDecay) {
  DescriptorModel model(LinearModel(2), 1);
  SgdConfig c;
  c.momentum = 0.9;
  c.weight_decay = 0.5;
  SgdOptimizer opt(model, c);
  const std::vector<double> w0(model.params().begin(), model.params().end());
  std::vector<double> g(model.num_params(), 1.0);
  opt.Step(model, g, 0.1);
  const std::vector<double> w1(model.params().begin(), model.params().end());
  opt.Step(model, g, 0.1);
  const ParamSegment& w = model.segment("desc.fc.w");
  const ParamSegment& b = model.segment("desc.fc.b");
  const std::size_t i = w.offset + 3, j = b.offset;
  const double v1 = -0.1 * (1 + 0.5 * w0[i]);
  EXPECT_DOUBLE_EQ(w1[i], w0[i] + v1);
  EXPECT_DOUBLE_EQ(model.params()[i], w1[i] + 0.9 * v1 - 0.1 * (1 + 0.5 * w1[i]));
  // Biases are not decayed.
  EXPECT_DOUBLE_EQ(w1[j], w0[j] - 0.1);
}

TEST(OptimizerTest, ThetaLayerStepIsScaledDown) {
  ModelConfig m;
  m.spatial_transformer = true;
  DescriptorModel model(m, 1);
  SgdConfig c;
  c.momentum = 0;
  c.weight_decay = 0;
  SgdOptimizer opt(model, c);
  opt.Step(model, std::vector<double>(model.num_params(), 1.0), 0.2);
  const auto& u = opt.last_update();
  EXPECT_DOUBLE_EQ(u[model.segment("st.fc.w").offset] / u[model.segment("desc.fc.w").offset], 0.01);
  EXPECT_DOUBLE_EQ(u[model.segment("st.fc.b").offset] / u[model.segment("st.conv1.w").offset],
                   0.01);
}

TEST(TrainTest, ZeroLearningRateLeavesParametersUnchanged) {
  const PatchDataset ds = GenerateSynthetic(Fixture(3, 10, 1)).Select({Split::kTrain});
  DescriptorModel model(LinearModel(8), 2);
  const std::vector<double> before(model.params().begin(), model.params().end());
  TrainConfig t = BasicTraining(8, 1);
  t.sgd.lr0 = 0.0;
  Train(model, ds, nullptr, t);
  EXPECT_TRUE(std::equal(before.begin(), before.end(), model.params().begin()));
}

TEST(TrainTest, SameSeedIsBitwiseReproducible) {
  const PatchDataset ds = GenerateSynthetic(Fixture(3, 10, 1)).Select({Split::kTrain});
  auto run = [&] {
    ModelConfig m;
    m.architecture = Architecture::kMlp2;
    m.output_dim = 8;
    DescriptorModel model(m, 3);
    TrainConfig t = BasicTraining(8, 2);
    t.sgd.lr0 = 0.05;
    const TrainResult r = Train(model, ds, nullptr, t);
    return std::make_pair(std::vector<double>(model.params().begin(), model.params().end()),
                          r.history.back().loss);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(TrainTest, HistoryRecordsEveryEpoch) {
  const PatchDataset all = GenerateSynthetic(Fixture(3, 10, 1));
  const PatchDataset train = all.Select({Split::kTrain});
  const PatchDataset val = all.Select({Split::kTest});
  DescriptorModel model(LinearModel(8), 2);
  int callbacks = 0;
  TrainConfig t = BasicTraining(8, 3);
  t.on_epoch = [&](const EpochRecord&) { ++callbacks; };
  const TrainResult r = Train(model, train, &val, t);
  ASSERT_EQ(r.history.size(), 3u);
  EXPECT_EQ(callbacks, 3);
  for (int e = 0; e < 3; ++e) {
    EXPECT_EQ(r.history[e].epoch, e);
    EXPECT_GE(r.history[e].val_map, 0.0);
    EXPECT_LE(r.history[e].val_map, 1.0);
    EXPECT_GT(r.history[e].batches, 0);
  }
  EXPECT_NE(FormatEpochRecord(r.history[0]).find("val_map="), std::string::npos);
}

TEST(TrainTest, LossDecreasesAcrossSeeds) {
  int improved = 0;
  const int runs = 20;
  for (int seed = 0; seed < runs; ++seed) {
    const PatchDataset ds = GenerateSynthetic(Fixture(4, 12, seed)).Select({Split::kTrain});
    DescriptorModel model(LinearModel(8), seed);
    TrainConfig t = BasicTraining(8, 4);
    t.sgd.lr0 = 0.02;
    t.sgd.seed = seed;
    const TrainResult r = Train(model, ds, nullptr, t);
    improved += r.history.back().loss < r.history.front().loss;
  }
  EXPECT_GE(improved, 19);
}

TEST(TrainTest, ConvergesOnSeparableFixture) {
  SyntheticConfig c = Fixture(8, 40, 7);
  c.held_out_sequences = 2;
  const PatchDataset all = GenerateSynthetic(c);
  const PatchDataset train = all.Select({Split::kTrain});
  const PatchDataset test = all.Select({Split::kTest});
  DescriptorModel model(LinearModel(8), 7);
  const double before =
      RetrievalMap(test, ComputeDescriptors(model, test), DistanceKind::kEuclidean).metric("map");
  TrainConfig t = BasicTraining(8, 30, 64);
  Train(model, train, nullptr, t);
  const double after =
      RetrievalMap(test, ComputeDescriptors(model, test), DistanceKind::kEuclidean).metric("map");
  EXPECT_GE(after, 0.95);
  EXPECT_GE(after - before, 0.2);
}

TEST(TrainTest, TanhHeadTrainsWithHammingBins) {
  const PatchDataset ds = GenerateSynthetic(Fixture(3, 10, 2)).Select({Split::kTrain});
  ModelConfig m = LinearModel(12);
  m.head = Head::kTanhCode;
  DescriptorModel model(m, 1);
  TrainConfig t = BasicTraining(12, 2);
  t.bins = BinningConfig::Hamming(12);
  EXPECT_EQ(Train(model, ds, nullptr, t).history.size(), 2u);
  t.bins = BinningConfig::Euclidean(12, 10);
  EXPECT_THROW(Train(model, ds, nullptr, t), Error);
}

TEST(TrainTest, MinedTwoSequenceTraining) {
  const PatchDataset ds = GenerateSynthetic(Fixture(4, 12, 3)).Select({Split::kTrain});
  MiningConfig mc;
  mc.clusters = 6;
  const std::vector<DistractorSet> mined = MineDataset(ds, mc);
  DescriptorModel model(LinearModel(8), 1);
  TrainConfig t = BasicTraining(8, 2);
  t.mode = BatchMode::kTwoSequence;
  t.distractors = &mined;
  const TrainResult r = Train(model, ds, nullptr, t);
  EXPECT_EQ(r.history[0].batches, 3);  // C(3, 2)
  EXPECT_TRUE(std::isfinite(r.history.back().loss));
}

TEST(TrainTest, DivergenceIsNumericError) {
  const PatchDataset ds = GenerateSynthetic(Fixture(3, 10, 1)).Select({Split::kTrain});
  ModelConfig m;
  m.architecture = Architecture::kMlp2;
  m.output_dim = 8;
  DescriptorModel model(m, 1);
  TrainConfig t = BasicTraining(8, 3);
  t.sgd.lr0 = 1e300;
  try {
    Train(model, ds, nullptr, t);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
}

TEST(TrainTest, PatchSizeMismatchIsConfigError) {
  const PatchDataset ds = GenerateSynthetic(Fixture(3, 10, 1)).Select({Split::kTrain});
  ModelConfig m = LinearModel(8);
  m.spatial_transformer = true;
  DescriptorModel model(m, 1);
  EXPECT_THROW(Train(model, ds, nullptr, BasicTraining(8, 1)), Error);
}

}  // namespace
}  // namespace apdesc
