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

#ifndef APDESC_MODEL_H_
#define APDESC_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "apdesc/heads.h"
#include "apdesc/image.h"
#include "apdesc/layers.h"
#include "apdesc/spatial_transformer.h"

namespace apdesc {

enum class Architecture { kLinear, kMlp2, kSmallConv };
enum class Head { kUnitNorm, kTanhCode };

const char* ArchitectureName(Architecture a);
const char* HeadName(Head h);
Architecture ParseArchitecture(const std::string& name);
Head ParseHead(const std::string& name);

struct ModelConfig {
  Architecture architecture = Architecture::kLinear;
  Head head = Head::kUnitNorm;
  int output_dim = 16;
  int patch_size = 32;
  int hidden_dim = 64;       // kMlp2
  int conv_channels1 = 8;    // kSmallConv
  int conv_channels2 = 16;   // kSmallConv
  bool spatial_transformer = false;
  STConfig st;
  int st_channels1 = 4;
  int st_channels2 = 8;
  int st_channels3 = 8;

  void Validate() const;
  // Side length of the patches accepted by Forward.
  int input_size() const { return spatial_transformer ? st.input_size : patch_size; }
};

// Zero-mean, unit-variance patch (population standard deviation). Patches
// whose deviation is negligible relative to their mean map to all zeros.
Image NormalizeInput(const Image& patch);

struct SampleCache {
  std::vector<std::vector<double>> localization;
  AffineParams theta;
  SamplingGrid grid;
  std::vector<std::vector<double>> descriptor;
};

struct ForwardCache {
  std::uint64_t model_id = 0;
  std::uint64_t generation = 0;
  std::vector<Image> inputs;  // only kept when the transformer is enabled
  std::vector<SampleCache> samples;
  Matrix raw;
  Matrix output;
  NormalizedRows normalized;
};

struct ForwardResult {
  Matrix embeddings;
  ForwardCache cache;
};

class DescriptorModel {
 public:
  DescriptorModel(const ModelConfig& config, std::uint64_t seed);

  // Builds the layout for `config` and adopts `params` verbatim.
  static DescriptorModel FromParameters(const ModelConfig& config, std::uint64_t seed,
                                        std::vector<double> params);

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  int output_dim() const { return config_.output_dim; }

  std::span<const double> params() const { return params_; }
  // Any mutable access invalidates caches from earlier forward calls.
  std::span<double> mutable_params();
  std::size_t num_params() const { return params_.size(); }

  const std::vector<ParamSegment>& segments() const { return segments_; }
  const ParamSegment& segment(const std::string& name) const;

  // Batch items are processed independently; results do not depend on the
  // thread count.
  ForwardResult Forward(std::span<const Image> batch) const;
  Matrix Embed(std::span<const Image> batch) const;

  // Gradient of the scalar loss with respect to all parameters given the
  // gradient with respect to the head output.
  std::vector<double> Backward(const ForwardCache& cache, const Matrix& grad_embeddings) const;

  // Theta predicted for one input (identity when the transformer is off).
  AffineParams PredictTheta(const Image& patch) const;

 private:
  DescriptorModel(const ModelConfig& config, std::uint64_t seed, bool initialize);

  ModelConfig config_;
  std::uint64_t seed_;
  std::uint64_t id_;
  std::uint64_t generation_ = 0;
  Network descriptor_;
  Network localization_;
  std::vector<ParamSegment> segments_;
  std::vector<double> params_;
};

}  // namespace apdesc

#endif  // APDESC_MODEL_H_
