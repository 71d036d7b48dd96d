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

#ifndef APDESC_CONFIG_H_
#define APDESC_CONFIG_H_

#include <map>
#include <string>
#include <vector>

#include "apdesc/checkpoint.h"
#include "apdesc/dataset.h"
#include "apdesc/evaluation.h"
#include "apdesc/mining.h"
#include "apdesc/model.h"
#include "apdesc/synthetic.h"
#include "apdesc/trainer.h"

namespace apdesc {

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* help;
};

// Every recognized key with its default.
const std::vector<ConfigKey>& ConfigKeys();

// Flat key = value run configuration. Unknown keys and malformed values are
// rejected with a config error naming the key.
class RunConfig {
 public:
  RunConfig();

  // "key = value" lines; '#' starts a comment.
  static RunConfig Parse(const std::string& text, const std::string& source = "<config>");
  static RunConfig Load(const std::string& path);

  void Set(const std::string& key, const std::string& value);
  const std::string& Get(const std::string& key) const;
  int GetInt(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  std::vector<std::string> GetList(const std::string& key) const;

  // All keys with their effective values, sorted by key.
  ConfigEcho Echo() const;

  ModelConfig Model() const;
  SyntheticConfig Synthetic() const;
  TrainConfig Training() const;
  MiningConfig Mining() const;
  DistractorPolicy Policy() const;

 private:
  std::map<std::string, std::string> values_;
};

// Loads the dataset named by data.source with patches sized for the model.
PatchDataset LoadRunData(const RunConfig& config);

}  // namespace apdesc

#endif  // APDESC_CONFIG_H_
