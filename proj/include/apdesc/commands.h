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

#ifndef APDESC_COMMANDS_H_
#define APDESC_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

#include "apdesc/config.h"
#include "apdesc/error.h"
#include "apdesc/evaluation.h"
#include "apdesc/gradcheck.h"
#include "apdesc/trainer.h"

namespace apdesc {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;   // usage and configuration errors
inline constexpr int kExitData = 2;     // unreadable or malformed data
inline constexpr int kExitNumeric = 3;  // divergence or failed gradient checks

int ExitCodeFor(const Error& e);

struct TrainOutput {
  std::string checkpoint;  // <out_dir>/model.ckpt
  std::string log;         // <out_dir>/train_log.txt
  TrainResult result;
};

// Trains on the training split and validates on the test split when it is
// non-empty. With mining.enabled the distractor files are written to
// <out_dir>/distractors/ first.
TrainOutput CmdTrain(const RunConfig& config, const std::string& out_dir, std::ostream& log);

// Writes <out_dir>/eval_<task>.txt (and curve files) for every task in
// eval.tasks. The checkpoint must agree with model.* and st.enabled.
std::vector<EvalReport> CmdEval(const std::string& checkpoint, const RunConfig& config,
                                const std::string& out_dir, std::ostream& log);

// One <out_dir>/distractors_<sequence>.txt per training sequence.
std::vector<std::string> CmdMine(const RunConfig& config, const std::string& out_dir,
                                 std::ostream& log);

// Writes <out_dir>/gradcheck.txt and prints one line per check.
std::vector<GradcheckResult> CmdGradcheck(const RunConfig& config, const std::string& out_dir,
                                          std::ostream& log);

}  // namespace apdesc

#endif  // APDESC_COMMANDS_H_
