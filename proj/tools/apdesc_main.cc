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

// apdesc: train, evaluate and mine local patch descriptors.
//
//   apdesc train     --config run.cfg --out runs/a
//   apdesc eval      --config run.cfg --checkpoint runs/a/model.ckpt --out runs/a
//   apdesc mine      --config run.cfg --out runs/a/mined
//   apdesc gradcheck [--config run.cfg] --out runs/check
//   apdesc keys
//
// Everything except paths and seeds comes from the config file.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "apdesc/commands.h"

namespace {

struct Common {
  std::string config;
  std::string out = ".";
  std::string data;
  long long seed = -1;
};

void AddCommon(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "run configuration file");
  if (config_required) opt->required();
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--data", c.data, "overrides data.path");
  cmd->add_option("--seed", c.seed, "overrides every *.seed key");
}

apdesc::RunConfig Resolve(const Common& c) {
  apdesc::RunConfig config = c.config.empty() ? apdesc::RunConfig() : apdesc::RunConfig::Load(c.config);
  if (!c.data.empty()) config.Set("data.path", c.data);
  if (c.seed >= 0)
    for (const auto& key : apdesc::ConfigKeys()) {
      const std::string name = key.name;
      if (name.ends_with(".seed")) config.Set(name, std::to_string(c.seed));
    }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Average-precision trained local descriptors"};
  app.require_subcommand(1);
  Common common;
  std::string checkpoint;

  auto* train = app.add_subcommand("train", "train a descriptor and write a checkpoint");
  AddCommon(train, common, true);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the configured tasks");
  AddCommon(eval, common, true);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  auto* mine = app.add_subcommand("mine", "mine in-sequence distractors");
  AddCommon(mine, common, true);
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  AddCommon(gradcheck, common, false);
  auto* keys = app.add_subcommand("keys", "list config keys with their defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? apdesc::kExitOk : apdesc::kExitConfig;
  }

  try {
    if (keys->parsed()) {
      for (const auto& k : apdesc::ConfigKeys())
        std::cout << k.name << " = " << k.default_value << "    # " << k.help << "\n";
      return apdesc::kExitOk;
    }
    const apdesc::RunConfig config = Resolve(common);
    if (train->parsed()) apdesc::CmdTrain(config, common.out, std::cout);
    if (eval->parsed()) apdesc::CmdEval(checkpoint, config, common.out, std::cout);
    if (mine->parsed()) apdesc::CmdMine(config, common.out, std::cout);
    if (gradcheck->parsed()) {
      bool ok = true;
      for (const auto& r : apdesc::CmdGradcheck(config, common.out, std::cout)) ok &= r.passed();
      std::cout << "gradcheck " << (ok ? "pass" : "fail") << "\n";
      if (!ok) return apdesc::kExitNumeric;
    }
  } catch (const apdesc::Error& e) {
    std::cerr << "apdesc: " << e.what() << "\n";
    return apdesc::ExitCodeFor(e);
  }
  return apdesc::kExitOk;
}
