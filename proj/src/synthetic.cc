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

#include "apdesc/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "apdesc/error.h"
#include "apdesc/spatial_transformer.h"

namespace apdesc {

namespace {

// Rendered values are mapped to 8-bit intensities as 128 + kContrast * v.
constexpr double kContrast = 28.0;

struct Wave {
  double fx, fy, phase, amplitude;
};

std::vector<Wave> RandomWaves(int count, double lo, double hi, double amplitude,
                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Wave> waves(count);
  const double a = amplitude * std::sqrt(2.0 / count);
  for (Wave& w : waves) {
    const double f = lo + (hi - lo) * u(rng);
    const double angle = 2 * std::numbers::pi * u(rng);
    w = {f * std::cos(angle), f * std::sin(angle), 2 * std::numbers::pi * u(rng), a};
  }
  return waves;
}

void AddWaves(Image& img, const std::vector<Wave>& waves) {
  const double center = 0.5 * (img.rows - 1);
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c) {
      double v = 0;
      for (const Wave& w : waves)
        v += w.amplitude * std::cos(w.fx * (c - center) + w.fy * (r - center) + w.phase);
      img.at(r, c) += v;
    }
}

Image RenderView(const Image& texture, const SyntheticConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = cfg.patch_size;
  Image view = texture;
  if (cfg.warp > 0) {
    const double angle = cfg.warp * u(rng);
    const double scale = std::exp(0.5 * cfg.warp * u(rng));
    const double tx = 0.5 * cfg.warp * u(rng), ty = 0.5 * cfg.warp * u(rng);
    AffineParams t;
    t.theta = {scale * std::cos(angle), -scale * std::sin(angle), tx,
               scale * std::sin(angle), scale * std::cos(angle), ty};
    view = SampleReplicate(texture, AffineGrid(t, n));
  }
  if (cfg.jitter > 0) {
    std::normal_distribution<double> noise(0.0, 0.15 * cfg.jitter);
    const double gain = 1.0 + 0.3 * cfg.jitter * u(rng);
    const double offset = 0.5 * cfg.jitter * u(rng);
    // Smooth illumination field: linear and quadratic terms.
    double coef[5];
    for (double& k : coef) k = 1.2 * cfg.jitter * u(rng);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        const double x = 2.0 * c / (n - 1) - 1.0, y = 2.0 * r / (n - 1) - 1.0;
        const double illum =
            coef[0] * x + coef[1] * y + coef[2] * x * x + coef[3] * y * y + coef[4] * x * y;
        view.at(r, c) = gain * view.at(r, c) + offset + illum + noise(rng);
      }
  }
  for (double& v : view.pixels)
    v = std::clamp(std::round(128.0 + kContrast * v), 0.0, 255.0);
  return view;
}

}  // namespace

void SyntheticConfig::Validate() const {
  Require(num_sequences >= 1, ErrorCode::kConfig, "synthetic: num_sequences must be >= 1");
  Require(groups_per_sequence >= 1, ErrorCode::kConfig,
          "synthetic: groups_per_sequence must be >= 1");
  Require(group_size >= 2, ErrorCode::kConfig, "synthetic: group_size must be >= 2");
  Require(patch_size >= 4, ErrorCode::kConfig, "synthetic: patch_size must be >= 4");
  Require(texture_waves >= 1, ErrorCode::kConfig, "synthetic: texture_waves must be >= 1");
  Require(min_frequency > 0 && max_frequency >= min_frequency, ErrorCode::kConfig,
          "synthetic: bad frequency range");
  Require(warp >= 0 && jitter >= 0 && sequence_texture >= 0, ErrorCode::kConfig,
          "synthetic: magnitudes must be non-negative");
  Require(held_out_sequences >= 0 && held_out_sequences <= num_sequences, ErrorCode::kConfig,
          "synthetic: held_out_sequences out of range");
}

PatchDataset GenerateSynthetic(const SyntheticConfig& cfg) {
  cfg.Validate();
  std::mt19937_64 rng(cfg.seed);
  PatchDataset ds;
  for (int s = 0; s < cfg.num_sequences; ++s) {
    const Split split =
        s >= cfg.num_sequences - cfg.held_out_sequences ? Split::kTest : Split::kTrain;
    ds.sequences.push_back({"synth_" + std::to_string(s), "synthetic", split, {}});
    Image base(cfg.patch_size, cfg.patch_size);
    if (cfg.sequence_texture > 0)
      AddWaves(base, RandomWaves(cfg.texture_waves, cfg.min_frequency, cfg.max_frequency,
                                 cfg.sequence_texture, rng));
    for (int g = 0; g < cfg.groups_per_sequence; ++g) {
      Image texture = base;
      AddWaves(texture,
               RandomWaves(cfg.texture_waves, cfg.min_frequency, cfg.max_frequency, 1.0, rng));
      std::vector<Image> views;
      for (int v = 0; v < cfg.group_size; ++v) views.push_back(RenderView(texture, cfg, rng));
      AddGroup(ds, s, static_cast<std::int64_t>(s) * cfg.groups_per_sequence + g,
               std::move(views));
    }
  }
  ds.Validate();
  return ds;
}

}  // namespace apdesc
