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

#include "apdesc/model.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

#include "apdesc/error.h"

namespace apdesc {

namespace {

std::atomic<std::uint64_t> g_next_stamp{1};

std::uint64_t NextStamp() { return g_next_stamp.fetch_add(1); }

// Samples per gradient-reduction chunk. Fixed so that the summation order
// never depends on the number of threads.
constexpr int kChunk = 8;

}  // namespace

const char* ArchitectureName(Architecture a) {
  switch (a) {
    case Architecture::kLinear:
      return "linear";
    case Architecture::kMlp2:
      return "mlp2";
    case Architecture::kSmallConv:
      return "smallconv";
  }
  return "?";
}

const char* HeadName(Head h) { return h == Head::kUnitNorm ? "unitnorm" : "tanhcode"; }

Architecture ParseArchitecture(const std::string& name) {
  for (Architecture a : {Architecture::kLinear, Architecture::kMlp2, Architecture::kSmallConv})
    if (name == ArchitectureName(a)) return a;
  Fail(ErrorCode::kConfig, "unknown architecture '" + name + "'");
}

Head ParseHead(const std::string& name) {
  for (Head h : {Head::kUnitNorm, Head::kTanhCode})
    if (name == HeadName(h)) return h;
  Fail(ErrorCode::kConfig, "unknown head '" + name + "'");
}

void ModelConfig::Validate() const {
  Require(output_dim >= 1, ErrorCode::kConfig, "output_dim must be positive");
  Require(patch_size >= 4, ErrorCode::kConfig, "patch_size must be at least 4");
  Require(hidden_dim >= 1, ErrorCode::kConfig, "hidden_dim must be positive");
  Require(conv_channels1 >= 1 && conv_channels2 >= 1, ErrorCode::kConfig,
          "conv channel counts must be positive");
  if (architecture == Architecture::kSmallConv)
    Require(patch_size % 4 == 0, ErrorCode::kConfig,
            "smallconv needs a patch size divisible by 4");
  if (spatial_transformer) {
    Require(st.output_size == patch_size, ErrorCode::kConfig,
            "transformer output size must equal the patch size");
    Require(st.input_size >= 8, ErrorCode::kConfig, "transformer input size too small");
    Require(st.localization_lr_scale > 0, ErrorCode::kConfig,
            "localization learning-rate scale must be positive");
    Require(st_channels1 >= 1 && st_channels2 >= 1 && st_channels3 >= 1, ErrorCode::kConfig,
            "localization channel counts must be positive");
  }
}

Image NormalizeInput(const Image& patch) {
  Require(!patch.empty(), ErrorCode::kShape, "cannot normalize an empty patch");
  const double n = static_cast<double>(patch.size());
  double mean = 0;
  for (double v : patch.pixels) mean += v;
  mean /= n;
  double var = 0;
  for (double v : patch.pixels) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  Image out(patch.rows, patch.cols);
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return out;
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = (patch.pixels[i] - mean) / sd;
  return out;
}

DescriptorModel::DescriptorModel(const ModelConfig& config, std::uint64_t seed)
    : DescriptorModel(config, seed, true) {}

DescriptorModel::DescriptorModel(const ModelConfig& config, std::uint64_t seed,
                                 bool initialize)
    : config_(config), seed_(seed), id_(NextStamp()), generation_(NextStamp()) {
  config_.Validate();
  const int p = config_.patch_size;
  std::size_t offset = 0;
  descriptor_ = Network({1, p, p});
  switch (config_.architecture) {
    case Architecture::kLinear:
      descriptor_.AddDense(config_.output_dim, "desc.fc", segments_, &offset);
      break;
    case Architecture::kMlp2:
      descriptor_.AddDense(config_.hidden_dim, "desc.fc1", segments_, &offset);
      descriptor_.AddTanh();
      descriptor_.AddDense(config_.output_dim, "desc.fc2", segments_, &offset);
      break;
    case Architecture::kSmallConv:
      descriptor_.AddConv(config_.conv_channels1, 1, "desc.conv1", segments_, &offset);
      descriptor_.AddRelu();
      descriptor_.AddAvgPool2();
      descriptor_.AddConv(config_.conv_channels2, 1, "desc.conv2", segments_, &offset);
      descriptor_.AddRelu();
      descriptor_.AddAvgPool2();
      descriptor_.AddDense(config_.output_dim, "desc.fc", segments_, &offset);
      break;
  }
  if (config_.spatial_transformer) {
    const int s = config_.st.input_size;
    localization_ = Network({1, s, s});
    localization_.AddConv(config_.st_channels1, 2, "st.conv1", segments_, &offset);
    localization_.AddRelu();
    localization_.AddConv(config_.st_channels2, 2, "st.conv2", segments_, &offset);
    localization_.AddRelu();
    localization_.AddConv(config_.st_channels3, 2, "st.conv3", segments_, &offset);
    localization_.AddRelu();
    localization_.AddDense(6, "st.fc", segments_, &offset);
    for (ParamSegment& seg : segments_)
      if (seg.name.starts_with("st.fc")) seg.lr_scale = config_.st.localization_lr_scale;
  }
  params_.assign(offset, 0.0);
  if (!initialize) return;

  // Descriptor weights are drawn first so that enabling the transformer
  // leaves them unchanged for a given seed.
  std::mt19937_64 rng(seed);
  descriptor_.Initialize(params_, rng);
  if (config_.spatial_transformer) {
    localization_.Initialize(params_, rng);
    const ParamSegment& w = segment("st.fc.w");
    const ParamSegment& b = segment("st.fc.b");
    std::fill_n(params_.begin() + w.offset, w.size, 0.0);
    const AffineParams identity;
    std::copy(identity.theta.begin(), identity.theta.end(), params_.begin() + b.offset);
  }
}

DescriptorModel DescriptorModel::FromParameters(const ModelConfig& config, std::uint64_t seed,
                                                std::vector<double> params) {
  DescriptorModel model(config, seed, false);
  Require(params.size() == model.params_.size(), ErrorCode::kShape,
          "parameter count does not match the architecture");
  model.params_ = std::move(params);
  return model;
}

std::span<double> DescriptorModel::mutable_params() {
  generation_ = NextStamp();
  return params_;
}

const ParamSegment& DescriptorModel::segment(const std::string& name) const {
  for (const ParamSegment& s : segments_)
    if (s.name == name) return s;
  Fail(ErrorCode::kConfig, "no parameter segment named '" + name + "'");
}

AffineParams DescriptorModel::PredictTheta(const Image& patch) const {
  AffineParams theta;
  if (!config_.spatial_transformer) return theta;
  std::vector<std::vector<double>> acts;
  localization_.Forward(params_, patch.pixels, acts);
  std::copy(acts.back().begin(), acts.back().end(), theta.theta.begin());
  return theta;
}

ForwardResult DescriptorModel::Forward(std::span<const Image> batch) const {
  const int m = static_cast<int>(batch.size());
  Require(m >= 1, ErrorCode::kShape, "empty batch");
  const int side = config_.input_size();
  for (const Image& img : batch) {
    Require(img.rows == side && img.cols == side, ErrorCode::kShape,
            "patch size does not match the model input");
    for (double v : img.pixels)
      Require(std::isfinite(v), ErrorCode::kNumeric, "non-finite input pixel");
  }
  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.model_id = id_;
  cache.generation = generation_;
  cache.samples.resize(m);
  cache.raw.resize(m, config_.output_dim);
  const bool st = config_.spatial_transformer;
  if (st) cache.inputs.assign(batch.begin(), batch.end());

  bool finite = true;
#pragma omp parallel for schedule(static) reduction(&& : finite)
  for (int i = 0; i < m; ++i) {
    SampleCache& sc = cache.samples[i];
    if (st) {
      localization_.Forward(params_, batch[i].pixels, sc.localization);
      std::copy(sc.localization.back().begin(), sc.localization.back().end(),
                sc.theta.theta.begin());
      bool ok = true;
      for (double v : sc.theta.theta) ok = ok && std::isfinite(v);
      if (!ok) {
        finite = false;
        continue;
      }
      sc.grid = AffineGrid(sc.theta, config_.st.output_size);
      const Image sampled = SampleReplicate(batch[i], sc.grid);
      descriptor_.Forward(params_, sampled.pixels, sc.descriptor);
    } else {
      descriptor_.Forward(params_, batch[i].pixels, sc.descriptor);
    }
    const std::vector<double>& out = sc.descriptor.back();
    for (int k = 0; k < config_.output_dim; ++k) {
      cache.raw(i, k) = out[k];
      finite = finite && std::isfinite(out[k]);
    }
  }
  Require(finite, ErrorCode::kNumeric, "non-finite activation in forward pass");

  if (config_.head == Head::kUnitNorm) {
    cache.normalized = L2NormalizeRows(cache.raw);
    cache.output = cache.normalized.unit;
  } else {
    cache.output = TanhRows(cache.raw);
  }
  Require(cache.output.allFinite(), ErrorCode::kNumeric, "non-finite descriptor output");
  result.embeddings = cache.output;
  return result;
}

Matrix DescriptorModel::Embed(std::span<const Image> batch) const {
  return Forward(batch).embeddings;
}

std::vector<double> DescriptorModel::Backward(const ForwardCache& cache,
                                              const Matrix& grad_embeddings) const {
  Require(cache.model_id == id_ && cache.generation == generation_, ErrorCode::kContract,
          "forward cache is stale or belongs to another model");
  const int m = static_cast<int>(cache.samples.size());
  Require(grad_embeddings.rows() == m && grad_embeddings.cols() == config_.output_dim,
          ErrorCode::kShape, "embedding gradient has the wrong shape");

  const Matrix grad_raw = config_.head == Head::kUnitNorm
                              ? L2NormalizeBackward(cache.normalized, grad_embeddings)
                              : TanhBackward(cache.output, grad_embeddings);

  const std::size_t n = params_.size();
  const int chunks = (m + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(n, 0.0));
  const bool st = config_.spatial_transformer;
  const int out_size = config_.st.output_size;

#pragma omp parallel for schedule(static)
  for (int c = 0; c < chunks; ++c) {
    std::vector<double>& acc = partial[c];
    std::vector<double> grad_out(config_.output_dim);
    std::vector<double> grad_sampled;
    for (int i = c * kChunk; i < std::min(m, (c + 1) * kChunk); ++i) {
      const SampleCache& sc = cache.samples[i];
      for (int k = 0; k < config_.output_dim; ++k) grad_out[k] = grad_raw(i, k);
      descriptor_.Backward(params_, sc.descriptor, grad_out, acc, st ? &grad_sampled : nullptr);
      if (!st) continue;
      Image upstream(out_size, out_size);
      upstream.pixels = grad_sampled;
      const SampleGradients sg = SampleBackward(cache.inputs[i], sc.grid, upstream);
      localization_.Backward(params_, sc.localization, sg.grad_theta, acc, nullptr);
    }
  }

  std::vector<double> grad(n, 0.0);
  for (const std::vector<double>& p : partial)
    for (std::size_t j = 0; j < n; ++j) grad[j] += p[j];
  return grad;
}

}  // namespace apdesc
