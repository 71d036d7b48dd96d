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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "apdesc/checkpoint.h"
#include "apdesc/commands.h"
#include "apdesc/error.h"

namespace apdesc {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("apdesc_cli_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string ReadFile(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Three sequences of 12 groups; the last one is held out.
RunConfig SmallRun(const std::string& extra = "") {
  return RunConfig::Parse(
      "synthetic.sequences = 3\n"
      "synthetic.groups = 12\n"
      "synthetic.held_out = 1\n"
      "sgd.epochs = 3\n"
      "batch.size = 16\n" +
      extra);
}

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kContract;
}

TEST(RunConfigTest, DefaultsMatchDocumentedValues) {
  const RunConfig c;
  EXPECT_EQ(c.GetInt("loss.bins"), 25);
  EXPECT_EQ(c.GetDouble("sgd.momentum"), 0.9);
  EXPECT_EQ(c.GetDouble("sgd.weight_decay"), 1e-4);
  EXPECT_EQ(c.Get("sgd.lr0"), "auto");
  EXPECT_DOUBLE_EQ(DefaultLearningRate(1024), 0.1);
  const TrainConfig t = c.Training();
  EXPECT_EQ(t.bins.kind, DistanceKind::kEuclidean);
  EXPECT_EQ(t.bins.bins, 25);
  EXPECT_FALSE(t.sgd.lr0.has_value());
  for (const ConfigKey& k : ConfigKeys()) EXPECT_NE(std::string(k.help), "") << k.name;
}

TEST(RunConfigTest, ParsesCommentsAndWhitespace) {
  const RunConfig c = RunConfig::Parse("# header\n\n  model.dim =  32  # trailing\nst.enabled=true\n");
  EXPECT_EQ(c.GetInt("model.dim"), 32);
  EXPECT_TRUE(c.GetBool("st.enabled"));
  EXPECT_EQ(c.Model().input_size(), 42);
}

TEST(RunConfigTest, RejectsUnknownKeyByName) {
  try {
    RunConfig::Parse("model.dims = 16\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("model.dims"), std::string::npos);
  }
}

TEST(RunConfigTest, RejectsMalformedValues) {
  EXPECT_EQ(CodeOf([] { RunConfig::Parse("model.dim = sixteen\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { RunConfig::Parse("model.arch = resnet\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { RunConfig::Parse("aug.enabled = maybe\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { RunConfig::Parse("just a line\n"); }), ErrorCode::kConfig);
}

TEST(RunConfigTest, TanhHeadUsesHammingBinsOfCodeLength) {
  const TrainConfig t = RunConfig::Parse("model.head = tanhcode\nmodel.dim = 24\n").Training();
  EXPECT_EQ(t.bins.kind, DistanceKind::kHamming);
  EXPECT_EQ(t.bins.bins, 24);
}

TEST(CmdTrainTest, LogsEveryEpochInOrderWithConfigEcho) {
  TempDir tmp;
  std::ostringstream log;
  const TrainOutput out = CmdTrain(SmallRun(), tmp / "run", log);
  ASSERT_TRUE(fs::exists(out.checkpoint));
  std::ifstream is(out.log);
  std::string line;
  int next_epoch = 0;
  bool echoed = false;
  while (std::getline(is, line)) {
    if (line.starts_with("# config.sgd.epochs = 3")) echoed = true;
    if (!line.starts_with("epoch=")) continue;
    EXPECT_TRUE(line.starts_with("epoch=" + std::to_string(next_epoch) + " ")) << line;
    ++next_epoch;
  }
  EXPECT_TRUE(echoed);
  EXPECT_EQ(next_epoch, 3);
  const LoadedCheckpoint ckpt = LoadCheckpoint(out.checkpoint);
  EXPECT_FALSE(ckpt.echo.empty());
}

TEST(CmdTrainTest, TransformerCheckpointCarriesThetaPredictor) {
  TempDir tmp;
  std::ostringstream log;
  const TrainOutput out = CmdTrain(SmallRun("st.enabled = true\nsgd.epochs = 1\n"), tmp / "run", log);
  const LoadedCheckpoint ckpt = LoadCheckpoint(out.checkpoint);
  EXPECT_TRUE(ckpt.model.config().spatial_transformer);
  // 42 -> 21 -> 11 -> 6 after three stride-2 convolutions with 8 channels.
  EXPECT_EQ(ckpt.model.segment("st.fc.w").size, 6 * 8 * 6 * 6u);
  EXPECT_EQ(ckpt.model.segment("st.fc.b").size, 6u);
}

TEST(CmdTrainTest, RerunGivesIdenticalCheckpointBytes) {
  TempDir tmp;
  std::ostringstream log;
  const TrainOutput a = CmdTrain(SmallRun(), tmp / "a", log);
  const TrainOutput b = CmdTrain(SmallRun(), tmp / "b", log);
  EXPECT_EQ(ReadFile(a.checkpoint), ReadFile(b.checkpoint));
  const TrainOutput c = CmdTrain(SmallRun("sgd.seed = 2\n"), tmp / "c", log);
  EXPECT_NE(ReadFile(a.checkpoint), ReadFile(c.checkpoint));
}

TEST(CmdTrainTest, MiningWritesDistractorsBeforeTraining) {
  TempDir tmp;
  std::ostringstream log;
  CmdTrain(SmallRun("mining.enabled = true\nmining.K = 6\nsgd.epochs = 1\n"), tmp / "run", log);
  EXPECT_TRUE(fs::exists(tmp / "run/distractors/distractors_synth_0.txt"));
  EXPECT_TRUE(fs::exists(tmp / "run/distractors/distractors_synth_1.txt"));
  EXPECT_FALSE(fs::exists(tmp / "run/distractors/distractors_synth_2.txt"));  // held out
}

TEST(CmdMineTest, OneFilePerSequenceAndReproducible) {
  TempDir tmp;
  std::ostringstream log;
  const RunConfig config =
      RunConfig::Parse("synthetic.sequences = 2\nsynthetic.groups = 10\nsynthetic.held_out = 0\n"
                       "mining.K = 5\n");
  const auto first = CmdMine(config, tmp / "a", log);
  const auto second = CmdMine(config, tmp / "b", log);
  ASSERT_EQ(first.size(), 2u);
  ASSERT_EQ(second.size(), 2u);
  for (int s = 0; s < 2; ++s) {
    EXPECT_EQ(ReadFile(first[s]), ReadFile(second[s]));
    EXPECT_FALSE(ReadDistractorFile(first[s]).pairs.empty());
    EXPECT_NE(ReadFile(first[s]).find("# config.mining.K 5"), std::string::npos);
  }
}

TEST(CmdMineTest, HundredthPercentileMinesNothing) {
  TempDir tmp;
  std::ostringstream log;
  const RunConfig config =
      RunConfig::Parse("synthetic.sequences = 2\nsynthetic.groups = 10\nsynthetic.held_out = 0\n"
                       "mining.K = 5\nmining.p = 100\n");
  for (const std::string& path : CmdMine(config, tmp / "m", log))
    EXPECT_TRUE(ReadDistractorFile(path).pairs.empty()) << path;
}

TEST(CmdGradcheckTest, DefaultConfigPassesAndListsEveryCheck) {
  TempDir tmp;
  std::ostringstream log;
  const auto results = CmdGradcheck(RunConfig(), tmp / "g", log);
  ASSERT_EQ(results.size(), GradcheckRegistry().size());
  const std::string report = ReadFile(tmp / "g/gradcheck.txt");
  for (std::size_t i = 0; i < results.size(); ++i) {
    EXPECT_TRUE(results[i].passed()) << FormatGradcheck(results[i]);
    EXPECT_EQ(results[i].name, GradcheckRegistry()[i].name);
    EXPECT_NE(report.find("check=" + results[i].name + " status=pass"), std::string::npos);
  }
  EXPECT_NE(report.find("# config."), std::string::npos);
}

TEST(CmdGradcheckTest, CorruptedGradientFails) {
  TempDir tmp;
  std::ostringstream log;
  for (const std::string name : {"ap_relax.batch_euclidean", "model.mlp2.unitnorm", "st.theta"}) {
    const auto results =
        CmdGradcheck(RunConfig::Parse("gradcheck.corrupt = " + name + "\n"), tmp / "g", log);
    for (const GradcheckResult& r : results) EXPECT_EQ(r.passed(), r.name != name) << r.name;
  }
  EXPECT_EQ(CodeOf([&] {
              CmdGradcheck(RunConfig::Parse("gradcheck.corrupt = nothing\n"), tmp / "g", log);
            }),
            ErrorCode::kConfig);
}

TEST(CmdEvalTest, RandomInitModelProducesEveryReport) {
  TempDir tmp;
  const RunConfig config = SmallRun();
  SaveCheckpoint(tmp / "init.ckpt", DescriptorModel(config.Model(), 5), config.Echo());
  std::ostringstream log;
  const auto reports = CmdEval(tmp / "init.ckpt", config, tmp / "eval", log);
  ASSERT_EQ(reports.size(), 3u);
  for (const std::string task : {"retrieval", "verification", "matching"}) {
    const std::string text = ReadFile(tmp / ("eval/eval_" + task + ".txt"));
    EXPECT_NE(text.find("config.model.dim = 16"), std::string::npos) << task;
    EXPECT_NE(text.find("config.checkpoint = "), std::string::npos) << task;
  }
  const double map = reports[0].metric("map");
  EXPECT_GT(map, 0.0);
  EXPECT_LE(map, 1.0);
}

TEST(CmdEvalTest, BinaryHeadIsEvaluatedOnSignCodes) {
  TempDir tmp;
  const RunConfig config = SmallRun("model.head = tanhcode\nmodel.dim = 12\neval.tasks = retrieval\n");
  const DescriptorModel model(config.Model(), 3);
  SaveCheckpoint(tmp / "bin.ckpt", model, config.Echo());
  std::ostringstream log;
  const auto reports = CmdEval(tmp / "bin.ckpt", config, tmp / "eval", log);

  // Independent route: sign the raw tanh outputs and rank by integer
  // Hamming distance.
  const PatchDataset test = LoadRunData(config).Select({Split::kTest});
  std::vector<Image> inputs;
  for (const Patch& p : test.patches) inputs.push_back(NormalizeInput(p.image));
  Matrix codes = model.Embed(inputs);
  for (int i = 0; i < codes.size(); ++i) codes.data()[i] = codes.data()[i] >= 0 ? 1.0 : -1.0;
  const EvalReport expected = RetrievalMap(test, codes, DistanceKind::kHamming);
  EXPECT_DOUBLE_EQ(reports[0].metric("map"), expected.metric("map"));
  const Matrix d = ComputeDescriptors(model, test);
  for (int i = 0; i < d.size(); ++i) EXPECT_EQ(std::abs(d.data()[i]), 1.0);
}

TEST(CmdEvalTest, DimensionMismatchIsExplicit) {
  TempDir tmp;
  const RunConfig config = SmallRun();
  SaveCheckpoint(tmp / "m.ckpt", DescriptorModel(config.Model(), 1));
  std::ostringstream log;
  try {
    CmdEval(tmp / "m.ckpt", SmallRun("model.dim = 8\n"), tmp / "eval", log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("model.dim"), std::string::npos);
  }
}

#ifdef APDESC_CLI_PATH
int RunCli(const std::string& args) {
  const int status = std::system((std::string(APDESC_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void WriteText(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

TEST(CliExitCodeTest, MapsFailureClasses) {
  TempDir tmp;
  WriteText(tmp / "ok.cfg",
            "synthetic.sequences = 2\nsynthetic.groups = 8\nsynthetic.held_out = 1\n"
            "sgd.epochs = 1\nbatch.size = 16\n");
  WriteText(tmp / "bad.cfg", "sgd.epoch = 1\n");
  WriteText(tmp / "ubc.cfg", "data.source = ubc\n");
  WriteText(tmp / "diverge.cfg",
            "synthetic.sequences = 2\nsynthetic.groups = 8\nsynthetic.held_out = 1\n"
            "sgd.epochs = 5\nbatch.size = 16\nsgd.lr0 = 1e300\nmodel.arch = mlp2\n");
  WriteText(tmp / "corrupt.cfg", "gradcheck.corrupt = st.theta\n");
  EXPECT_EQ(RunCli("train --config " + tmp / "ok.cfg" + " --out " + tmp / "ok"), kExitOk);
  EXPECT_EQ(RunCli("bogus"), kExitConfig);
  EXPECT_EQ(RunCli("train"), kExitConfig);
  EXPECT_EQ(RunCli("train --config " + tmp / "bad.cfg" + " --out " + tmp / "x"), kExitConfig);
  EXPECT_EQ(RunCli("train --config " + tmp / "ubc.cfg" + " --data " + tmp / "missing" +
                   " --out " + tmp / "x"),
            kExitData);
  EXPECT_EQ(RunCli("train --config " + tmp / "diverge.cfg" + " --out " + tmp / "x"), kExitNumeric);
  EXPECT_EQ(RunCli("gradcheck --config " + tmp / "corrupt.cfg" + " --out " + tmp / "g"),
            kExitNumeric);
  EXPECT_EQ(RunCli("gradcheck --out " + tmp / "g"), kExitOk);
}
#endif

}  // namespace
}  // namespace apdesc
