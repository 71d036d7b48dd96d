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

#ifndef APDESC_LAYERS_H_
#define APDESC_LAYERS_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace apdesc {

struct Shape3 {
  int channels = 1;
  int rows = 1;
  int cols = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * rows * cols;
  }
  bool operator==(const Shape3&) const = default;
};

// Named slice of the flat parameter vector.
struct ParamSegment {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  double lr_scale = 1.0;
  bool weight_decay = true;
};

enum class LayerKind { kConv, kDense, kRelu, kTanh, kAvgPool2 };

struct Layer {
  LayerKind kind;
  Shape3 in;
  Shape3 out;
  int kernel = 0;
  int stride = 1;
  int pad = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

// Feed-forward stack evaluated one sample at a time over a shared flat
// parameter vector. Activations are stored channel-major.
class Network {
 public:
  Network() = default;
  explicit Network(Shape3 input) : input_(input), output_(input) {}

  // Each Add* appends the layer's parameters (if any) to `segments`,
  // starting at `*next_offset`.
  void AddConv(int out_channels, int stride, const std::string& name,
               std::vector<ParamSegment>& segments, std::size_t* next_offset);
  void AddDense(int out_features, const std::string& name,
                std::vector<ParamSegment>& segments, std::size_t* next_offset);
  void AddRelu();
  void AddTanh();
  void AddAvgPool2();

  const Shape3& input_shape() const { return input_; }
  const Shape3& output_shape() const { return output_; }
  const std::vector<Layer>& layers() const { return layers_; }

  // He-uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
  void Initialize(std::span<double> params, std::mt19937_64& rng) const;

  // activations[0] is the input, activations[i + 1] the output of layer i.
  void Forward(std::span<const double> params, std::span<const double> input,
               std::vector<std::vector<double>>& activations) const;

  // Accumulates parameter gradients into `grad_params`; writes the input
  // gradient when `grad_input` is non-null.
  void Backward(std::span<const double> params,
                const std::vector<std::vector<double>>& activations,
                std::span<const double> grad_output, std::span<double> grad_params,
                std::vector<double>* grad_input) const;

 private:
  Shape3 input_;
  Shape3 output_;
  std::vector<Layer> layers_;
};

}  // namespace apdesc

#endif  // APDESC_LAYERS_H_
