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

#ifndef APDESC_CHECKPOINT_H_
#define APDESC_CHECKPOINT_H_

#include <string>
#include <utility>
#include <vector>

#include "apdesc/model.h"

namespace apdesc {

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

// Checkpoint layout: a text header (magic line, architecture, dimensions,
// head, transformer settings, seed, parameter segments, config echo)
// terminated by a line reading "end", followed by the flat parameter array
// as little-endian IEEE-754 doubles.
void SaveCheckpoint(const std::string& path, const DescriptorModel& model,
                    const ConfigEcho& echo = {});

struct LoadedCheckpoint {
  DescriptorModel model;
  ConfigEcho echo;
};

LoadedCheckpoint LoadCheckpoint(const std::string& path);

}  // namespace apdesc

#endif  // APDESC_CHECKPOINT_H_
