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

#include <algorithm>
#include <cmath>
#include <string>

#include "ap_loss_internal.h"
#include "apdesc/ap_relax.h"
#include "apdesc/error.h"

namespace apdesc {
namespace internal {

RelationMatrix ResolveAndValidate(const EmbeddingBatch& batch,
                                  const BinningConfig& cfg,
                                  const RelationMatrix* relations) {
  cfg.Validate();
  const Matrix& f = batch.values;
  const int m = static_cast<int>(f.rows());
  Require(m >= 2, ErrorCode::kPrecondition, "batch needs at least two rows");
  Require(static_cast<int>(batch.groups.size()) == m, ErrorCode::kShape,
          "one group label per embedding row is required");
  Require(f.cols() == cfg.code_length, ErrorCode::kShape,
          "embedding dimension " + std::to_string(f.cols()) +
              " does not match binning code length " +
              std::to_string(cfg.code_length));
  Require(f.allFinite(), ErrorCode::kNumeric, "non-finite embedding value");
  if (cfg.kind == DistanceKind::kHamming) {
    Require(f.cwiseAbs().maxCoeff() <= 1.0, ErrorCode::kPrecondition,
            "Hamming relaxation expects codes in [-1, 1]");
  } else {
    for (int i = 0; i < m; ++i)
      Require(std::abs(f.row(i).norm() - 1.0) <= 1e-6, ErrorCode::kPrecondition,
              "row " + std::to_string(i) + " is not unit-normalized");
  }

  RelationMatrix rel = relations != nullptr ? *relations
                                            : RelationMatrix::FromGroups(batch.groups);
  Require(rel.size() == m, ErrorCode::kShape, "relation matrix size mismatch");
  for (int q = 0; q < m; ++q) {
    bool has_match = false;
    for (int x = 0; x < m && !has_match; ++x)
      has_match = x != q && rel.at(q, x) == PairRelation::kMatch;
    Require(has_match, ErrorCode::kPrecondition,
            "row " + std::to_string(q) + " (group " + std::to_string(batch.groups[q]) +
                ") has no other member of its group in the batch");
  }
  return rel;
}

}  // namespace internal

namespace {

// Dense sweep over the b linear pieces between neighbouring bin centers;
// the piece holding d splits its unit mass between its two end bins.
// Returns the number of piece evaluations.
int AccumulateSoftCounts(double d, int bins, double delta, std::vector<double>& hist) {
  for (int k = 0; k < bins; ++k) {
    const double lo = k * delta;
    const double hi = lo + delta;
    if (d >= lo && (d < hi || k == bins - 1)) {
      const double t = (d - lo) / delta;
      hist[k] += 1.0 - t;
      hist[k + 1] += t;
    }
  }
  return bins;
}

// d(sum_k g_k delta(d, k)) / dd with the left-derivative convention.
int KernelSlope(double d, int bins, double delta, const std::vector<double>& g,
                double& slope) {
  slope = 0.0;
  for (int k = 0; k < bins; ++k) {
    const double lo = k * delta;
    const double hi = lo + delta;
    if ((d > lo || k == 0) && (d <= hi || k == bins - 1))
      slope = (g[k + 1] - g[k]) / delta;
  }
  return bins;
}

}  // namespace

ApLossResult ApLossBatch(const EmbeddingBatch& batch, const BinningConfig& cfg,
                         const RelationMatrix* relations, KernelCounters* counters) {
  const RelationMatrix rel = internal::ResolveAndValidate(batch, cfg, relations);
  const Matrix& f = batch.values;
  const int m = static_cast<int>(f.rows());
  const int bins = cfg.bins;
  const double delta = cfg.delta();
  const bool hamming = cfg.kind == DistanceKind::kHamming;
  const double code_length = static_cast<double>(f.cols());

  const Matrix gram = f * f.transpose();
  Matrix dist(m, m);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double d = hamming ? 0.5 * (code_length - gram(i, j))
                               : std::sqrt(std::max(0.0, 2.0 - 2.0 * gram(i, j)));
      dist(i, j) = i == j ? 0.0 : std::clamp(d, 0.0, cfg.max_distance());
    }
  }

  // coeff(q, x) = d loss / d D(q, x) through query q's histogram.
  Matrix coeff = Matrix::Zero(m, m);
  std::vector<double> ap(m);
  std::uint64_t kernel_evaluations = 0;
#pragma omp parallel for schedule(static) reduction(+ : kernel_evaluations)
  for (int q = 0; q < m; ++q) {
    DistanceHistogram hist{std::vector<double>(bins + 1, 0.0),
                           std::vector<double>(bins + 1, 0.0)};
    for (int x = 0; x < m; ++x) {
      const PairRelation r = rel.at(q, x);
      if (x == q || r == PairRelation::kIgnore) continue;
      kernel_evaluations += AccumulateSoftCounts(
          dist(q, x), bins, delta, r == PairRelation::kMatch ? hist.pos : hist.neg);
    }
    const HistogramApGradient g = HistogramApGrad(hist);
    ap[q] = g.ap;
    for (int x = 0; x < m; ++x) {
      const PairRelation r = rel.at(q, x);
      if (x == q || r == PairRelation::kIgnore) continue;
      double slope = 0.0;
      kernel_evaluations += KernelSlope(
          dist(q, x), bins, delta, r == PairRelation::kMatch ? g.d_pos : g.d_neg, slope);
      coeff(q, x) = -slope / m;
    }
  }

  ApLossResult out;
  out.grad_embeddings = Matrix::Zero(m, f.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const double c = coeff(i, j) + coeff(j, i);
      if (c == 0.0) continue;
      const double d_dist = hamming
                                ? -0.5
                                : -1.0 / std::max(dist(i, j),
                                                  internal::kMinEuclideanDistance);
      out.grad_embeddings.row(i) += (c * d_dist) * f.row(j);
    }
  }

  double ap_sum = 0.0;
  for (double v : ap) ap_sum += v;
  out.loss = 1.0 - ap_sum / m;
  out.per_query_ap = std::move(ap);
  Require(std::isfinite(out.loss) && out.grad_embeddings.allFinite(),
          ErrorCode::kNumeric, "AP loss produced a non-finite value");

  if (counters != nullptr) {
    counters->distance_evaluations += static_cast<std::uint64_t>(m) * (m - 1);
    counters->kernel_evaluations += kernel_evaluations;
  }
  return out;
}

}  // namespace apdesc
