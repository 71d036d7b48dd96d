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

#include "apdesc/commands.h"

#include <filesystem>
#include <fstream>

#include "apdesc/checkpoint.h"
#include "apdesc/mining.h"

namespace apdesc {

namespace {

namespace fs = std::filesystem;

std::string Prepare(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  Require(!ec, ErrorCode::kConfig, "cannot create output directory '" + out_dir + "'");
  return out_dir;
}

PatchDataset SelectSplit(const PatchDataset& data, const std::string& split) {
  if (split == "all") return data;
  const Split s = split == "train" ? Split::kTrain : split == "val" ? Split::kVal : Split::kTest;
  return data.Select({s});
}

PatchDataset TrainingSet(const PatchDataset& data) {
  PatchDataset train = data.Select({Split::kTrain});
  Require(!train.sequences.empty(), ErrorCode::kConfig,
          "the dataset has no training sequences");
  return train;
}

void WriteEcho(std::ostream& os, const ConfigEcho& echo) {
  for (const auto& [key, value] : echo) os << "# config." << key << " = " << value << "\n";
}

std::vector<std::string> WriteDistractors(const PatchDataset& data,
                                          const std::vector<DistractorSet>& sets,
                                          const RunConfig& config, const std::string& dir) {
  std::vector<std::string> paths;
  for (const DistractorSet& set : sets) {
    const std::string& name = data.sequences[set.sequence].name;
    paths.push_back((fs::path(dir) / ("distractors_" + name + ".txt")).string());
    WriteDistractorFile(paths.back(), set, config.Mining(), name, config.Echo());
  }
  return paths;
}

void RequireAgrees(const std::string& key, const std::string& checkpoint_value,
                   const std::string& config_value) {
  Require(checkpoint_value == config_value, ErrorCode::kConfig,
          "checkpoint has " + key + " = " + checkpoint_value + " but the config says " +
              config_value);
}

EvalReport MatchingReport(const PatchDataset& data, const Matrix& descriptors, DistanceKind kind) {
  // The first two views of every group stand in for an image pair; the
  // correct correspondence pairs the two views of the same group.
  std::vector<Match> matches;
  std::vector<bool> correct;
  int ground_truth = 0;
  for (const Sequence& seq : data.sequences) {
    std::vector<int> first, second;
    for (int g : seq.groups) {
      if (data.groups[g].patches.size() < 2) continue;
      first.push_back(data.groups[g].patches[0]);
      second.push_back(data.groups[g].patches[1]);
    }
    if (first.empty()) continue;
    Matrix a(first.size(), descriptors.cols()), b(second.size(), descriptors.cols());
    for (std::size_t i = 0; i < first.size(); ++i) {
      a.row(i) = descriptors.row(first[i]);
      b.row(i) = descriptors.row(second[i]);
    }
    for (const Match& m : MutualNnMatch(a, b, kind)) {
      matches.push_back(m);
      correct.push_back(m.i == m.j);
    }
    ground_truth += static_cast<int>(first.size());
  }
  Require(ground_truth > 0, ErrorCode::kConfig, "matching needs groups with two views");
  return MatchingPrMap(matches, correct, ground_truth);
}

}  // namespace

int ExitCodeFor(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kFormat:
      return kExitData;
    case ErrorCode::kNumeric:
      return kExitNumeric;
    default:
      return kExitConfig;
  }
}

TrainOutput CmdTrain(const RunConfig& config, const std::string& out_dir, std::ostream& log) {
  Prepare(out_dir);
  const ModelConfig model_config = config.Model();
  TrainConfig train_config = config.Training();
  const PatchDataset data = LoadRunData(config);
  const PatchDataset train = TrainingSet(data);
  const PatchDataset held_out = data.Select({Split::kTest});

  std::vector<DistractorSet> mined;
  if (config.GetBool("mining.enabled")) {
    mined = MineDataset(train, config.Mining());
    const std::string dir = Prepare((fs::path(out_dir) / "distractors").string());
    WriteDistractors(train, mined, config, dir);
    train_config.distractors = &mined;
  }

  TrainOutput out;
  out.log = (fs::path(out_dir) / "train_log.txt").string();
  out.checkpoint = (fs::path(out_dir) / "model.ckpt").string();
  std::ofstream file(out.log);
  Require(file.good(), ErrorCode::kConfig, "cannot write '" + out.log + "'");
  WriteEcho(file, config.Echo());
  train_config.on_epoch = [&](const EpochRecord& r) {
    const std::string line = FormatEpochRecord(r);
    file << line << "\n" << std::flush;
    log << line << "\n";
  };

  DescriptorModel model(model_config, static_cast<std::uint64_t>(config.GetInt("model.seed")));
  out.result = Train(model, train, held_out.sequences.empty() ? nullptr : &held_out, train_config);
  SaveCheckpoint(out.checkpoint, model, config.Echo());
  log << "checkpoint " << out.checkpoint << "\n";
  return out;
}

std::vector<EvalReport> CmdEval(const std::string& checkpoint, const RunConfig& config,
                                const std::string& out_dir, std::ostream& log) {
  Prepare(out_dir);
  const LoadedCheckpoint loaded = LoadCheckpoint(checkpoint);
  const ModelConfig& mc = loaded.model.config();
  const ModelConfig want = config.Model();
  RequireAgrees("model.dim", std::to_string(mc.output_dim), std::to_string(want.output_dim));
  RequireAgrees("model.head", HeadName(mc.head), HeadName(want.head));
  RequireAgrees("model.arch", ArchitectureName(mc.architecture),
                ArchitectureName(want.architecture));
  RequireAgrees("st.enabled", mc.spatial_transformer ? "true" : "false",
                want.spatial_transformer ? "true" : "false");

  const PatchDataset data = SelectSplit(LoadRunData(config), config.Get("eval.split"));
  Require(!data.patches.empty(), ErrorCode::kConfig,
          "eval.split '" + config.Get("eval.split") + "' selects no patches");
  const Matrix descriptors = ComputeDescriptors(loaded.model, data);
  const DistanceKind kind = DescriptorDistance(loaded.model);

  ConfigEcho echo = config.Echo();
  echo.emplace_back("checkpoint", checkpoint);
  for (const auto& [key, value] : loaded.echo) echo.emplace_back("checkpoint." + key, value);

  std::vector<EvalReport> reports;
  for (const std::string& task : config.GetList("eval.tasks")) {
    EvalReport report;
    if (task == "retrieval") {
      RetrievalProtocol protocol;
      protocol.policy = config.Policy();
      report = RetrievalMap(data, descriptors, kind, protocol);
    } else if (task == "verification") {
      const int pairs = config.GetInt("eval.pairs");
      const VerificationSet set = SampleVerificationPairs(
          data, pairs, pairs, static_cast<std::uint64_t>(config.GetInt("eval.seed")));
      report = EvaluateVerification(set, descriptors, kind);
    } else if (task == "matching") {
      report = MatchingReport(data, descriptors, kind);
    } else {
      Fail(ErrorCode::kConfig, "unknown task '" + task + "' in eval.tasks");
    }
    report.task = task;
    report.echo = echo;
    WriteReport((fs::path(out_dir) / ("eval_" + task)).string(), report);
    for (const auto& [name, value] : report.metrics) log << task << "." << name << " = " << value << "\n";
    reports.push_back(std::move(report));
  }
  return reports;
}

std::vector<std::string> CmdMine(const RunConfig& config, const std::string& out_dir,
                                 std::ostream& log) {
  Prepare(out_dir);
  const PatchDataset train = TrainingSet(LoadRunData(config));
  const std::vector<DistractorSet> sets = MineDataset(train, config.Mining());
  const std::vector<std::string> paths = WriteDistractors(train, sets, config, out_dir);
  for (std::size_t s = 0; s < sets.size(); ++s)
    log << paths[s] << " pairs=" << sets[s].pairs.size() << " threshold=" << sets[s].threshold
        << "\n";
  return paths;
}

std::vector<GradcheckResult> CmdGradcheck(const RunConfig& config, const std::string& out_dir,
                                          std::ostream& log) {
  Prepare(out_dir);
  GradcheckOptions options;
  options.seed = static_cast<std::uint64_t>(config.GetInt("gradcheck.seed"));
  options.corrupt = config.Get("gradcheck.corrupt");
  const std::vector<GradcheckResult> results = RunGradchecks(options);
  const std::string path = (fs::path(out_dir) / "gradcheck.txt").string();
  std::ofstream file(path);
  Require(file.good(), ErrorCode::kConfig, "cannot write '" + path + "'");
  WriteEcho(file, config.Echo());
  for (const GradcheckResult& r : results) {
    file << FormatGradcheck(r) << "\n";
    log << FormatGradcheck(r) << "\n";
  }
  return results;
}

}  // namespace apdesc
