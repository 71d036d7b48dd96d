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

#include "apdesc/config.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "apdesc/error.h"

namespace apdesc {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool IsOneOf(const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (v == o) return true;
  return false;
}

}  // namespace

const std::vector<ConfigKey>& ConfigKeys() {
  static const std::vector<ConfigKey> keys = {
      {"data.source", "synthetic", "synthetic | ubc | hpatches | container"},
      {"data.path", "", "dataset directory or container file"},
      {"data.test_sequences", "", "comma-separated HPatches sequences held out for testing"},
      {"synthetic.sequences", "20", "number of sequences"},
      {"synthetic.groups", "50", "groups per sequence"},
      {"synthetic.group_size", "4", "patches per group"},
      {"synthetic.warp", "0.03", "affine jitter magnitude"},
      {"synthetic.jitter", "1.0", "photometric jitter magnitude"},
      {"synthetic.sequence_texture", "0.5", "amplitude of the per-sequence texture"},
      {"synthetic.held_out", "5", "trailing sequences placed in the test split"},
      {"synthetic.seed", "1", "generator seed"},
      {"model.arch", "linear", "linear | mlp2 | smallconv"},
      {"model.dim", "16", "descriptor dimension or code length"},
      {"model.head", "unitnorm", "unitnorm (real-valued) | tanhcode (binary)"},
      {"model.hidden", "64", "mlp2 hidden width"},
      {"model.conv1", "8", "smallconv first-layer channels"},
      {"model.conv2", "16", "smallconv second-layer channels"},
      {"model.seed", "1", "initialization seed"},
      {"st.enabled", "false", "spatial transformer front end"},
      {"st.input_size", "42", "transformer input patch size"},
      {"st.lr_scale", "0.01", "learning-rate scale of the theta layer"},
      {"loss.bins", "25", "histogram bins for real-valued descriptors"},
      {"batch.mode", "uniform", "uniform | two_sequence | small_dataset"},
      {"batch.size", "64", "patches per batch"},
      {"batch.epoch_batches", "1000", "batches per epoch in small_dataset mode"},
      {"sgd.lr0", "auto", "initial learning rate; auto = 0.1 * batch.size / 1024"},
      {"sgd.momentum", "0.9", "momentum"},
      {"sgd.weight_decay", "1e-4", "weight decay"},
      {"sgd.schedule", "linear", "linear (to zero) | step"},
      {"sgd.epochs", "100", "training epochs"},
      {"sgd.step_every", "10", "epochs between step-schedule decays"},
      {"sgd.seed", "1", "sampling and augmentation seed"},
      {"aug.enabled", "true", "random flips and 90-degree rotations"},
      {"mining.enabled", "false", "mine in-sequence distractors before training"},
      {"mining.K", "100", "clusters per sequence"},
      {"mining.p", "20", "distance percentile threshold"},
      {"mining.seed", "1", "k-means seed"},
      {"eval.tasks", "retrieval,verification,matching", "comma-separated tasks"},
      {"eval.split", "test", "train | val | test | all"},
      {"eval.policy", "all", "all | out_of_sequence | in_sequence"},
      {"eval.pairs", "2000", "positive (and negative) verification pairs"},
      {"eval.seed", "1", "verification pair sampling seed"},
      {"gradcheck.seed", "1", "seed for random gradient-check inputs"},
      {"gradcheck.corrupt", "", "check name whose analytic gradient is perturbed"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const ConfigKey& k : ConfigKeys()) values_[k.name] = k.default_value;
}

RunConfig RunConfig::Parse(const std::string& text, const std::string& source) {
  RunConfig config;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    Require(eq != std::string::npos, ErrorCode::kConfig,
            source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    config.Set(Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
  }
  return config;
}

RunConfig RunConfig::Load(const std::string& path) {
  std::ifstream is(path);
  Require(is.good(), ErrorCode::kConfig, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return Parse(ss.str(), path);
}

void RunConfig::Set(const std::string& key, const std::string& value) {
  Require(values_.contains(key), ErrorCode::kConfig, "unknown config key '" + key + "'");
  const std::string old = values_[key];
  values_[key] = value;
  // Validate eagerly so the error names the offending key.
  try {
    const std::string& v = value;
    if (key == "data.source")
      Require(IsOneOf(v, {"synthetic", "ubc", "hpatches", "container"}), ErrorCode::kConfig, "");
    else if (key == "model.arch")
      ParseArchitecture(v);
    else if (key == "model.head")
      ParseHead(v);
    else if (key == "batch.mode")
      ParseBatchMode(v);
    else if (key == "sgd.schedule")
      ParseSchedule(v);
    else if (key == "eval.split")
      Require(IsOneOf(v, {"train", "val", "test", "all"}), ErrorCode::kConfig, "");
    else if (key == "eval.policy")
      Policy();
    else if (key == "sgd.lr0") {
      if (v != "auto") GetDouble(key);
    } else if (key.ends_with("enabled"))
      GetBool(key);
    else if (IsOneOf(key, {"data.path", "data.test_sequences", "eval.tasks", "gradcheck.corrupt"}))
      ;
    else if (IsOneOf(key, {"synthetic.warp", "synthetic.jitter", "synthetic.sequence_texture",
                           "st.lr_scale", "sgd.momentum", "sgd.weight_decay", "mining.p"}))
      GetDouble(key);
    else
      GetInt(key);
  } catch (const Error&) {
    values_[key] = old;
    Fail(ErrorCode::kConfig, "invalid value '" + value + "' for config key '" + key + "'");
  }
}

const std::string& RunConfig::Get(const std::string& key) const {
  auto it = values_.find(key);
  Require(it != values_.end(), ErrorCode::kConfig, "unknown config key '" + key + "'");
  return it->second;
}

int RunConfig::GetInt(const std::string& key) const {
  const std::string& v = Get(key);
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  Require(used == v.size() && !v.empty(), ErrorCode::kConfig,
          "config key '" + key + "' needs an integer, got '" + v + "'");
  return static_cast<int>(out);
}

double RunConfig::GetDouble(const std::string& key) const {
  const std::string& v = Get(key);
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  Require(used == v.size() && !v.empty(), ErrorCode::kConfig,
          "config key '" + key + "' needs a number, got '" + v + "'");
  return out;
}

bool RunConfig::GetBool(const std::string& key) const {
  const std::string& v = Get(key);
  if (IsOneOf(v, {"true", "1", "yes", "on"})) return true;
  if (IsOneOf(v, {"false", "0", "no", "off"})) return false;
  Fail(ErrorCode::kConfig, "config key '" + key + "' needs true or false, got '" + v + "'");
}

std::vector<std::string> RunConfig::GetList(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream is(Get(key));
  std::string item;
  while (std::getline(is, item, ','))
    if (!Trim(item).empty()) out.push_back(Trim(item));
  return out;
}

ConfigEcho RunConfig::Echo() const { return {values_.begin(), values_.end()}; }

ModelConfig RunConfig::Model() const {
  ModelConfig m;
  m.architecture = ParseArchitecture(Get("model.arch"));
  m.head = ParseHead(Get("model.head"));
  m.output_dim = GetInt("model.dim");
  m.hidden_dim = GetInt("model.hidden");
  m.conv_channels1 = GetInt("model.conv1");
  m.conv_channels2 = GetInt("model.conv2");
  m.spatial_transformer = GetBool("st.enabled");
  m.st.input_size = GetInt("st.input_size");
  m.st.localization_lr_scale = GetDouble("st.lr_scale");
  m.Validate();
  return m;
}

SyntheticConfig RunConfig::Synthetic() const {
  SyntheticConfig s;
  s.num_sequences = GetInt("synthetic.sequences");
  s.groups_per_sequence = GetInt("synthetic.groups");
  s.group_size = GetInt("synthetic.group_size");
  s.warp = GetDouble("synthetic.warp");
  s.jitter = GetDouble("synthetic.jitter");
  s.sequence_texture = GetDouble("synthetic.sequence_texture");
  s.held_out_sequences = GetInt("synthetic.held_out");
  s.seed = static_cast<std::uint64_t>(GetInt("synthetic.seed"));
  s.patch_size = Model().input_size();
  s.Validate();
  return s;
}

TrainConfig RunConfig::Training() const {
  TrainConfig t;
  const ModelConfig m = Model();
  if (Get("sgd.lr0") != "auto") t.sgd.lr0 = GetDouble("sgd.lr0");
  t.sgd.momentum = GetDouble("sgd.momentum");
  t.sgd.weight_decay = GetDouble("sgd.weight_decay");
  t.sgd.schedule = ParseSchedule(Get("sgd.schedule"));
  t.sgd.epochs = GetInt("sgd.epochs");
  t.sgd.step_every = GetInt("sgd.step_every");
  t.sgd.seed = static_cast<std::uint64_t>(GetInt("sgd.seed"));
  t.sgd.Validate();
  t.mode = ParseBatchMode(Get("batch.mode"));
  t.batch_size = GetInt("batch.size");
  t.epoch_batches = GetInt("batch.epoch_batches");
  t.augment = GetBool("aug.enabled");
  t.bins = m.head == Head::kTanhCode ? BinningConfig::Hamming(m.output_dim)
                                     : BinningConfig::Euclidean(m.output_dim, GetInt("loss.bins"));
  t.bins.Validate();
  return t;
}

MiningConfig RunConfig::Mining() const {
  MiningConfig c;
  c.clusters = GetInt("mining.K");
  c.percentile = GetDouble("mining.p");
  c.seed = static_cast<std::uint64_t>(GetInt("mining.seed"));
  c.Validate();
  return c;
}

DistractorPolicy RunConfig::Policy() const {
  const std::string& v = Get("eval.policy");
  for (DistractorPolicy p : {DistractorPolicy::kAll, DistractorPolicy::kOutOfSequenceOnly,
                             DistractorPolicy::kInSequenceOnly})
    if (v == DistractorPolicyName(p)) return p;
  Fail(ErrorCode::kConfig, "unknown distractor policy '" + v + "'");
}

PatchDataset LoadRunData(const RunConfig& config) {
  const std::string& source = config.Get("data.source");
  const int size = config.Model().input_size();
  const std::string& path = config.Get("data.path");
  if (source == "synthetic") return GenerateSynthetic(config.Synthetic());
  Require(!path.empty(), ErrorCode::kConfig, "data.path is required for source '" + source + "'");
  if (source == "ubc") return LoadUbc(path, size);
  if (source == "hpatches") {
    const std::vector<std::string> test = config.GetList("data.test_sequences");
    return LoadHpatches(path, size, {test.begin(), test.end()});
  }
  PatchDataset ds = LoadDataset(path);
  Require(ds.patch_size() == size, ErrorCode::kFormat,
          "container patches are " + std::to_string(ds.patch_size()) + " pixels, model expects " +
              std::to_string(size));
  return ds;
}

}  // namespace apdesc
