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

#include "apdesc/layers.h"

#include <algorithm>
#include <cmath>

#include "apdesc/error.h"

namespace apdesc {

void Network::AddConv(int out_channels, int stride, const std::string& name,
                      std::vector<ParamSegment>& segments, std::size_t* next_offset) {
  Layer l{LayerKind::kConv, output_, {}, 3, stride, 1};
  l.out = {out_channels, (output_.rows + 2 * l.pad - l.kernel) / stride + 1,
           (output_.cols + 2 * l.pad - l.kernel) / stride + 1};
  const std::size_t weights =
      static_cast<std::size_t>(out_channels) * output_.channels * l.kernel * l.kernel;
  l.weight_offset = *next_offset;
  l.bias_offset = l.weight_offset + weights;
  segments.push_back({name + ".w", l.weight_offset, weights, 1.0, true});
  segments.push_back({name + ".b", l.bias_offset, static_cast<std::size_t>(out_channels),
                      1.0, false});
  *next_offset = l.bias_offset + out_channels;
  output_ = l.out;
  layers_.push_back(l);
}

void Network::AddDense(int out_features, const std::string& name,
                       std::vector<ParamSegment>& segments, std::size_t* next_offset) {
  Layer l{LayerKind::kDense, output_, {out_features, 1, 1}};
  const std::size_t weights = static_cast<std::size_t>(out_features) * output_.size();
  l.weight_offset = *next_offset;
  l.bias_offset = l.weight_offset + weights;
  segments.push_back({name + ".w", l.weight_offset, weights, 1.0, true});
  segments.push_back({name + ".b", l.bias_offset, static_cast<std::size_t>(out_features),
                      1.0, false});
  *next_offset = l.bias_offset + out_features;
  output_ = l.out;
  layers_.push_back(l);
}

void Network::AddRelu() {
  layers_.push_back({LayerKind::kRelu, output_, output_});
}

void Network::AddTanh() {
  layers_.push_back({LayerKind::kTanh, output_, output_});
}

void Network::AddAvgPool2() {
  Require(output_.rows % 2 == 0 && output_.cols % 2 == 0, ErrorCode::kShape,
          "2x2 pooling needs even spatial dimensions");
  Shape3 out{output_.channels, output_.rows / 2, output_.cols / 2};
  layers_.push_back({LayerKind::kAvgPool2, output_, out});
  output_ = out;
}

void Network::Initialize(std::span<double> params, std::mt19937_64& rng) const {
  for (const Layer& l : layers_) {
    std::size_t fan_in = 0, weights = 0, biases = 0;
    if (l.kind == LayerKind::kConv) {
      fan_in = static_cast<std::size_t>(l.in.channels) * l.kernel * l.kernel;
      weights = fan_in * l.out.channels;
      biases = l.out.channels;
    } else if (l.kind == LayerKind::kDense) {
      fan_in = l.in.size();
      weights = fan_in * l.out.size();
      biases = l.out.size();
    } else {
      continue;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (std::size_t i = 0; i < weights; ++i) params[l.weight_offset + i] = uniform(rng);
    for (std::size_t i = 0; i < biases; ++i) params[l.bias_offset + i] = 0.0;
  }
}

namespace {

std::size_t Index(const Shape3& s, int c, int r, int col) {
  return (static_cast<std::size_t>(c) * s.rows + r) * s.cols + col;
}

void ConvForward(const Layer& l, std::span<const double> p, std::span<const double> in,
                 std::vector<double>& out) {
  const int k = l.kernel;
  for (int o = 0; o < l.out.channels; ++o) {
    const double bias = p[l.bias_offset + o];
    for (int y = 0; y < l.out.rows; ++y) {
      for (int x = 0; x < l.out.cols; ++x) {
        double acc = bias;
        for (int i = 0; i < l.in.channels; ++i) {
          const double* w = &p[l.weight_offset +
                               ((static_cast<std::size_t>(o) * l.in.channels + i) * k) * k];
          for (int ky = 0; ky < k; ++ky) {
            const int iy = y * l.stride + ky - l.pad;
            if (iy < 0 || iy >= l.in.rows) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = x * l.stride + kx - l.pad;
              if (ix < 0 || ix >= l.in.cols) continue;
              acc += w[ky * k + kx] * in[Index(l.in, i, iy, ix)];
            }
          }
        }
        out[Index(l.out, o, y, x)] = acc;
      }
    }
  }
}

void ConvBackward(const Layer& l, std::span<const double> p, std::span<const double> in,
                  std::span<const double> g_out, std::span<double> g_params,
                  std::vector<double>* g_in) {
  const int k = l.kernel;
  for (int o = 0; o < l.out.channels; ++o) {
    for (int y = 0; y < l.out.rows; ++y) {
      for (int x = 0; x < l.out.cols; ++x) {
        const double g = g_out[Index(l.out, o, y, x)];
        if (g == 0.0) continue;
        g_params[l.bias_offset + o] += g;
        for (int i = 0; i < l.in.channels; ++i) {
          const std::size_t base =
              l.weight_offset + ((static_cast<std::size_t>(o) * l.in.channels + i) * k) * k;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = y * l.stride + ky - l.pad;
            if (iy < 0 || iy >= l.in.rows) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = x * l.stride + kx - l.pad;
              if (ix < 0 || ix >= l.in.cols) continue;
              const std::size_t in_idx = Index(l.in, i, iy, ix);
              g_params[base + ky * k + kx] += g * in[in_idx];
              if (g_in != nullptr) (*g_in)[in_idx] += g * p[base + ky * k + kx];
            }
          }
        }
      }
    }
  }
}

void DenseForward(const Layer& l, std::span<const double> p, std::span<const double> in,
                  std::vector<double>& out) {
  const std::size_t n_in = l.in.size();
  for (std::size_t o = 0; o < l.out.size(); ++o) {
    const double* w = &p[l.weight_offset + o * n_in];
    double acc = p[l.bias_offset + o];
    for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * in[i];
    out[o] = acc;
  }
}

void DenseBackward(const Layer& l, std::span<const double> p, std::span<const double> in,
                   std::span<const double> g_out, std::span<double> g_params,
                   std::vector<double>* g_in) {
  const std::size_t n_in = l.in.size();
  for (std::size_t o = 0; o < l.out.size(); ++o) {
    const double g = g_out[o];
    if (g == 0.0) continue;
    g_params[l.bias_offset + o] += g;
    double* gw = &g_params[l.weight_offset + o * n_in];
    for (std::size_t i = 0; i < n_in; ++i) gw[i] += g * in[i];
    if (g_in != nullptr) {
      const double* w = &p[l.weight_offset + o * n_in];
      for (std::size_t i = 0; i < n_in; ++i) (*g_in)[i] += g * w[i];
    }
  }
}

}  // namespace

void Network::Forward(std::span<const double> params, std::span<const double> input,
                      std::vector<std::vector<double>>& activations) const {
  Require(input.size() == input_.size(), ErrorCode::kShape, "network input size mismatch");
  activations.resize(layers_.size() + 1);
  activations[0].assign(input.begin(), input.end());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const Layer& l = layers_[li];
    const std::vector<double>& in = activations[li];
    std::vector<double>& out = activations[li + 1];
    out.assign(l.out.size(), 0.0);
    switch (l.kind) {
      case LayerKind::kConv:
        ConvForward(l, params, in, out);
        break;
      case LayerKind::kDense:
        DenseForward(l, params, in, out);
        break;
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::max(0.0, in[i]);
        break;
      case LayerKind::kTanh:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
        break;
      case LayerKind::kAvgPool2:
        for (int c = 0; c < l.out.channels; ++c)
          for (int y = 0; y < l.out.rows; ++y)
            for (int x = 0; x < l.out.cols; ++x)
              out[Index(l.out, c, y, x)] =
                  0.25 * (in[Index(l.in, c, 2 * y, 2 * x)] + in[Index(l.in, c, 2 * y, 2 * x + 1)] +
                          in[Index(l.in, c, 2 * y + 1, 2 * x)] +
                          in[Index(l.in, c, 2 * y + 1, 2 * x + 1)]);
        break;
    }
  }
}

void Network::Backward(std::span<const double> params,
                       const std::vector<std::vector<double>>& activations,
                       std::span<const double> grad_output, std::span<double> grad_params,
                       std::vector<double>* grad_input) const {
  Require(activations.size() == layers_.size() + 1, ErrorCode::kContract,
          "activations do not belong to this network");
  std::vector<double> grad(grad_output.begin(), grad_output.end());
  std::vector<double> grad_in;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& l = layers_[li];
    const std::vector<double>& in = activations[li];
    const std::vector<double>& out = activations[li + 1];
    const bool need_input = li > 0 || grad_input != nullptr;
    grad_in.assign(l.in.size(), 0.0);
    switch (l.kind) {
      case LayerKind::kConv:
        ConvBackward(l, params, in, grad, grad_params, need_input ? &grad_in : nullptr);
        break;
      case LayerKind::kDense:
        DenseBackward(l, params, in, grad, grad_params, need_input ? &grad_in : nullptr);
        break;
      case LayerKind::kRelu:
        for (std::size_t i = 0; i < in.size(); ++i) grad_in[i] = in[i] > 0.0 ? grad[i] : 0.0;
        break;
      case LayerKind::kTanh:
        for (std::size_t i = 0; i < in.size(); ++i)
          grad_in[i] = grad[i] * (1.0 - out[i] * out[i]);
        break;
      case LayerKind::kAvgPool2:
        for (int c = 0; c < l.out.channels; ++c)
          for (int y = 0; y < l.out.rows; ++y)
            for (int x = 0; x < l.out.cols; ++x) {
              const double g = 0.25 * grad[Index(l.out, c, y, x)];
              grad_in[Index(l.in, c, 2 * y, 2 * x)] = g;
              grad_in[Index(l.in, c, 2 * y, 2 * x + 1)] = g;
              grad_in[Index(l.in, c, 2 * y + 1, 2 * x)] = g;
              grad_in[Index(l.in, c, 2 * y + 1, 2 * x + 1)] = g;
            }
        break;
    }
    grad.swap(grad_in);
  }
  if (grad_input != nullptr) *grad_input = std::move(grad);
}

}  // namespace apdesc
