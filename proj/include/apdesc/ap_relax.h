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

#ifndef APDESC_AP_RELAX_H_
#define APDESC_AP_RELAX_H_

#include <cstdint>
#include <span>
#include <vector>

#include "apdesc/image.h"

namespace apdesc {

enum class DistanceKind { kHamming, kEuclidean };

// Quantization of the distance range [0, bins * delta()] into bins + 1
// histogram bins centered at k * delta(), k = 0..bins.
struct BinningConfig {
  int bins = 25;
  DistanceKind kind = DistanceKind::kEuclidean;
  // Descriptor length. Equals `bins` for Hamming codes.
  int code_length = 0;

  static BinningConfig Hamming(int code_length);
  static BinningConfig Euclidean(int dim, int bins = 25);

  void Validate() const;
  double delta() const { return kind == DistanceKind::kHamming ? 1.0 : 2.0 / bins; }
  double max_distance() const { return kind == DistanceKind::kHamming ? bins : 2.0; }
  int num_bins() const { return bins + 1; }
};

// Soft per-query counts of matching (pos) and non-matching (neg) database
// items in each distance bin.
struct DistanceHistogram {
  std::vector<double> pos;
  std::vector<double> neg;
};

struct HistogramApGradient {
  double ap = 0.0;
  std::vector<double> d_pos;
  std::vector<double> d_neg;
};

// (b - u.v) / 2; the number of differing bits when u, v are +-1 codes.
double HammingDistance(std::span<const double> u, std::span<const double> v);

// sqrt(2 - 2 u.v) for unit vectors.
double EuclideanDistance(std::span<const double> u, std::span<const double> v);

// Triangular kernel weights max(0, 1 - |d - c_k| / delta) for every bin.
// Distances outside the binning range are clamped onto it.
std::vector<double> SoftBin(double d, const BinningConfig& cfg);

// Derivative of SoftBin with respect to d. At kernel kinks the derivative
// from the left is returned (from the right at d = 0).
std::vector<double> SoftBinGrad(double d, const BinningConfig& cfg);

// Expected AP when items sharing a bin are ordered uniformly at random,
// written in closed form with digamma functions so that it extends
// smoothly to fractional counts. Exact on integer histograms.
double HistogramAp(const DistanceHistogram& h);
HistogramApGradient HistogramApGrad(const DistanceHistogram& h);

// Descriptor outputs (one row per patch) with their group labels.
struct EmbeddingBatch {
  Matrix values;
  std::vector<std::int64_t> groups;
};

enum class PairRelation : std::int8_t { kIgnore = 0, kMatch = 1, kNonMatch = 2 };

// Per-pair supervision. Row i lists how item j enters query i's database.
// Without one, same-group pairs match and all other pairs are non-matches.
class RelationMatrix {
 public:
  RelationMatrix() = default;
  explicit RelationMatrix(int size, PairRelation fill = PairRelation::kNonMatch)
      : size_(size), relations_(static_cast<std::size_t>(size) * size, fill) {}

  static RelationMatrix FromGroups(std::span<const std::int64_t> groups);

  int size() const { return size_; }
  PairRelation at(int i, int j) const {
    return relations_[static_cast<std::size_t>(i) * size_ + j];
  }
  void set(int i, int j, PairRelation r) {
    relations_[static_cast<std::size_t>(i) * size_ + j] = r;
  }

 private:
  int size_ = 0;
  std::vector<PairRelation> relations_;
};

// Work counters for the batch loss.
struct KernelCounters {
  std::uint64_t distance_evaluations = 0;
  std::uint64_t kernel_evaluations = 0;
};

struct ApLossResult {
  double loss = 0.0;
  std::vector<double> per_query_ap;
  // d loss / d embeddings, same shape as the input batch.
  Matrix grad_embeddings;
};

// Every row is a query against the other rows. loss = 1 - mean relaxed AP.
// OpenMP-parallel over queries; results do not depend on the thread count.
ApLossResult ApLossBatch(const EmbeddingBatch& batch, const BinningConfig& cfg,
                         const RelationMatrix* relations = nullptr,
                         KernelCounters* counters = nullptr);

// Straightforward single-threaded evaluation of the same loss built from
// the per-pair primitives above. Kept as the reference for ApLossBatch.
ApLossResult ApLossBatchSerial(const EmbeddingBatch& batch,
                               const BinningConfig& cfg,
                               const RelationMatrix* relations = nullptr);

}  // namespace apdesc

#endif  // APDESC_AP_RELAX_H_
