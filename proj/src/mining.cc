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

#include "apdesc/mining.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "apdesc/error.h"

namespace apdesc {

namespace {

constexpr int kSigned = 18;
constexpr int kUnsigned = 9;
constexpr double kTruncate = 0.2;

// Felzenszwalb-style cell features from hard-binned gradient votes.
std::vector<double> HogFeatures(const Image& img, int cell) {
  const int n = img.rows;
  const int cells = n / cell;
  std::vector<double> hist(static_cast<std::size_t>(cells) * cells * kSigned, 0.0);
  for (int r = 0; r < cells * cell; ++r) {
    for (int c = 0; c < cells * cell; ++c) {
      const double dx = img.at(r, std::min(c + 1, n - 1)) - img.at(r, std::max(c - 1, 0));
      const double dy = img.at(std::min(r + 1, n - 1), c) - img.at(std::max(r - 1, 0), c);
      const double mag = std::hypot(dx, dy);
      if (mag == 0.0) continue;
      double angle = std::atan2(dy, dx);
      if (angle < 0) angle += 2 * std::numbers::pi;
      const int bin =
          std::min(kSigned - 1, static_cast<int>(angle / (2 * std::numbers::pi) * kSigned));
      hist[((r / cell) * cells + c / cell) * kSigned + bin] += mag;
    }
  }

  std::vector<double> energy(static_cast<std::size_t>(cells) * cells, 0.0);
  for (int i = 0; i < cells * cells; ++i)
    for (int o = 0; o < kUnsigned; ++o) {
      const double u = hist[i * kSigned + o] + hist[i * kSigned + o + kUnsigned];
      energy[i] += u * u;
    }
  auto e = [&](int r, int c) {
    r = std::clamp(r, 0, cells - 1);
    c = std::clamp(c, 0, cells - 1);
    return energy[r * cells + c];
  };

  constexpr double kEps = 1e-4;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(cells) * cells * 31);
  for (int r = 0; r < cells; ++r) {
    for (int c = 0; c < cells; ++c) {
      double norm[4];
      int k = 0;
      for (int dr : {-1, 1})
        for (int dc : {-1, 1})
          norm[k++] = 1.0 / std::sqrt(e(r, c) + e(r + dr, c) + e(r, c + dc) +
                                      e(r + dr, c + dc) + kEps);
      const double* h = &hist[(r * cells + c) * kSigned];
      double texture[4] = {0, 0, 0, 0};
      for (int o = 0; o < kSigned; ++o) {
        double sum = 0;
        for (int b = 0; b < 4; ++b) {
          const double v = std::min(h[o] * norm[b], kTruncate);
          sum += v;
          texture[b] += v;
        }
        out.push_back(0.5 * sum);
      }
      for (int o = 0; o < kUnsigned; ++o) {
        double sum = 0;
        for (int b = 0; b < 4; ++b)
          sum += std::min((h[o] + h[o + kUnsigned]) * norm[b], kTruncate);
        out.push_back(0.5 * sum);
      }
      for (int b = 0; b < 4; ++b) out.push_back(0.2357 * texture[b]);
    }
  }
  return out;
}

double SquaredDistance(const Matrix& a, int i, const Matrix& b, int j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

}  // namespace

void MiningConfig::Validate() const {
  Require(clusters >= 1, ErrorCode::kConfig, "mining: clusters must be positive");
  Require(percentile >= 0 && percentile <= 100, ErrorCode::kConfig,
          "mining: percentile must lie in [0, 100]");
  Require(hog_cell >= 1 && hog_resize >= hog_cell && hog_resize % hog_cell == 0,
          ErrorCode::kConfig, "mining: hog_resize must be a multiple of hog_cell");
  Require(raw_resize >= 1, ErrorCode::kConfig, "mining: raw_resize must be positive");
  Require(max_iterations >= 1, ErrorCode::kConfig, "mining: max_iterations must be positive");
}

std::vector<double> MiningFeature(const Image& patch, const MiningConfig& config) {
  config.Validate();
  Require(!patch.empty(), ErrorCode::kShape, "empty patch");
  Image scaled = patch;
  for (double& v : scaled.pixels) v /= 255.0;
  std::vector<double> out =
      HogFeatures(ResizeBilinear(scaled, config.hog_resize, config.hog_resize), config.hog_cell);
  const Image raw = ResizeBilinear(scaled, config.raw_resize, config.raw_resize);
  out.insert(out.end(), raw.pixels.begin(), raw.pixels.end());
  return out;
}

KMeansResult KMeans(const Matrix& x, int k, std::uint64_t seed, int max_iterations) {
  const int n = static_cast<int>(x.rows());
  Require(k >= 1, ErrorCode::kConfig, "k-means needs at least one cluster");
  Require(n >= k, ErrorCode::kConfig,
          "k-means needs at least as many points (" + std::to_string(n) + ") as clusters (" +
              std::to_string(k) + ")");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  KMeansResult res;
  res.centers.resize(k, x.cols());
  res.centers.row(0) = x.row(static_cast<int>(rng() % n));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0;
    for (int i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], SquaredDistance(x, i, res.centers, c - 1));
      total += nearest[i];
    }
    int pick = static_cast<int>(rng() % n);
    if (total > 0) {
      double target = u(rng) * total;
      for (int i = 0; i < n; ++i) {
        if (nearest[i] <= 0) continue;
        pick = i;
        target -= nearest[i];
        if (target <= 0) break;
      }
    }
    res.centers.row(c) = x.row(pick);
  }

  res.assignments.assign(n, -1);
  std::vector<double> dist(n);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    double distortion = 0;
#pragma omp parallel for schedule(static) reduction(|| : changed) reduction(+ : distortion)
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = SquaredDistance(x, i, res.centers, 0);
      for (int c = 1; c < k; ++c) {
        const double d = SquaredDistance(x, i, res.centers, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      changed = changed || best != res.assignments[i];
      res.assignments[i] = best;
      dist[i] = best_d;
      distortion += best_d;
    }
    res.distortion.push_back(distortion);
    res.iterations = it + 1;
    if (!changed) break;

    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(res.assignments[i]) += x.row(i);
      ++counts[res.assignments[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        res.centers.row(c) = sums.row(c) / counts[c];
        continue;
      }
      // Empty cluster: take the point worst served by its current center.
      int far = 0;
      for (int i = 1; i < n; ++i)
        if (dist[i] > dist[far]) far = i;
      res.centers.row(c) = x.row(far);
      dist[far] = 0;
    }
  }
  return res;
}

double NearestRankPercentile(std::vector<double> values, double p) {
  Require(!values.empty(), ErrorCode::kRange, "percentile of an empty list");
  Require(p >= 0 && p <= 100, ErrorCode::kRange, "percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(p / 100.0 * static_cast<double>(values.size()));
  const std::size_t index = rank < 1 ? 0 : static_cast<std::size_t>(rank) - 1;
  return values[std::min(index, values.size() - 1)];
}

DistractorSet MineDistractors(const PatchDataset& dataset, const std::vector<int>& patches,
                              const std::vector<int>& assignments, const Matrix& centers,
                              double percentile) {
  Require(patches.size() == assignments.size(), ErrorCode::kShape,
          "one cluster assignment per patch expected");
  DistractorSet set;
  if (!patches.empty()) set.sequence = dataset.sequence_of(patches[0]);
  const int k = static_cast<int>(centers.rows());
  if (k < 2) {
    LogWarning("fewer than two clusters; no distractors mined");
    return set;
  }
  Matrix cd(k, k);
  std::vector<double> all;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      cd(a, b) = (centers.row(a) - centers.row(b)).norm();
      if (a < b) all.push_back(cd(a, b));
    }
  set.threshold = NearestRankPercentile(all, percentile);
  for (std::size_t i = 0; i < patches.size(); ++i) {
    for (std::size_t j = i + 1; j < patches.size(); ++j) {
      if (!(cd(assignments[i], assignments[j]) > set.threshold)) continue;
      if (dataset.patches[patches[i]].group == dataset.patches[patches[j]].group) continue;
      set.pairs.emplace_back(std::min(patches[i], patches[j]), std::max(patches[i], patches[j]));
    }
  }
  std::sort(set.pairs.begin(), set.pairs.end());
  return set;
}

std::vector<DistractorSet> MineDataset(const PatchDataset& dataset, const MiningConfig& config) {
  config.Validate();
  const int s_count = static_cast<int>(dataset.sequences.size());
  std::vector<DistractorSet> out(s_count);
  for (int s = 0; s < s_count; ++s) {
    std::vector<int> patches;
    for (int g : dataset.sequences[s].groups)
      for (int p : dataset.groups[g].patches) patches.push_back(p);
    Matrix features(static_cast<Eigen::Index>(patches.size()), config.feature_dim());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(patches.size()); ++i) {
      const std::vector<double> f = MiningFeature(dataset.patches[patches[i]].image, config);
      features.row(i) = Eigen::Map<const Eigen::RowVectorXd>(f.data(), f.size());
    }
    int k = config.clusters;
    if (static_cast<int>(patches.size()) < k) {
      LogWarning("sequence '" + dataset.sequences[s].name + "' has fewer patches than clusters");
      k = static_cast<int>(patches.size());
    }
    if (k == 0) {
      out[s].sequence = s;
      continue;
    }
    const KMeansResult km = KMeans(features, k, config.seed + s, config.max_iterations);
    out[s] = MineDistractors(dataset, patches, km.assignments, km.centers, config.percentile);
    out[s].sequence = s;
  }
  return out;
}

void WriteDistractorFile(const std::string& path, const DistractorSet& set,
                         const MiningConfig& config, const std::string& sequence_name,
                         const ConfigEcho& echo) {
  std::ofstream os(path);
  Require(os.good(), ErrorCode::kFormat, "cannot write '" + path + "'");
  os.precision(17);
  os << "# sequence " << sequence_name << "\n"
     << "# clusters " << config.clusters << "\n"
     << "# percentile " << config.percentile << "\n"
     << "# hog_resize " << config.hog_resize << "\n"
     << "# hog_cell " << config.hog_cell << "\n"
     << "# raw_resize " << config.raw_resize << "\n"
     << "# seed " << config.seed << "\n"
     << "# threshold " << set.threshold << "\n"
     << "# pairs " << set.pairs.size() << "\n";
  for (const auto& [key, value] : echo) os << "# config." << key << " " << value << "\n";
  for (const auto& [a, b] : set.pairs) os << a << " " << b << "\n";
}

DistractorSet ReadDistractorFile(const std::string& path) {
  std::ifstream is(path);
  Require(is.good(), ErrorCode::kFormat, "cannot open '" + path + "'");
  DistractorSet set;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "threshold") ls >> set.threshold;
      continue;
    }
    int a, b;
    Require(static_cast<bool>(ls >> a >> b) && a < b, ErrorCode::kFormat,
            path + ":" + std::to_string(line_no) + ": malformed pair");
    set.pairs.emplace_back(a, b);
  }
  return set;
}

}  // namespace apdesc
