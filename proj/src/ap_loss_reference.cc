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
#include <span>

#include "ap_loss_internal.h"
#include "apdesc/ap_relax.h"

namespace apdesc {

ApLossResult ApLossBatchSerial(const EmbeddingBatch& batch,
                               const BinningConfig& cfg,
                               const RelationMatrix* relations) {
  const RelationMatrix rel = internal::ResolveAndValidate(batch, cfg, relations);
  const Matrix& f = batch.values;
  const int m = static_cast<int>(f.rows());
  const auto row = [&](int i) {
    return std::span<const double>(f.data() + static_cast<std::ptrdiff_t>(i) * f.cols(),
                                   static_cast<std::size_t>(f.cols()));
  };
  const auto distance = [&](int i, int j) {
    return cfg.kind == DistanceKind::kHamming ? HammingDistance(row(i), row(j))
                                              : EuclideanDistance(row(i), row(j));
  };

  ApLossResult out;
  out.grad_embeddings = Matrix::Zero(m, f.cols());
  out.per_query_ap.resize(m);
  double ap_sum = 0.0;
  for (int q = 0; q < m; ++q) {
    DistanceHistogram hist{std::vector<double>(cfg.num_bins(), 0.0),
                           std::vector<double>(cfg.num_bins(), 0.0)};
    for (int x = 0; x < m; ++x) {
      if (x == q || rel.at(q, x) == PairRelation::kIgnore) continue;
      const std::vector<double> w = SoftBin(distance(q, x), cfg);
      auto& target = rel.at(q, x) == PairRelation::kMatch ? hist.pos : hist.neg;
      for (int k = 0; k < cfg.num_bins(); ++k) target[k] += w[k];
    }
    const HistogramApGradient g = HistogramApGrad(hist);
    out.per_query_ap[q] = g.ap;
    ap_sum += g.ap;

    for (int x = 0; x < m; ++x) {
      if (x == q || rel.at(q, x) == PairRelation::kIgnore) continue;
      const double d = distance(q, x);
      const std::vector<double> dw = SoftBinGrad(d, cfg);
      const auto& d_ap = rel.at(q, x) == PairRelation::kMatch ? g.d_pos : g.d_neg;
      double slope = 0.0;
      for (int k = 0; k < cfg.num_bins(); ++k) slope += dw[k] * d_ap[k];
      const double c = -slope / m;
      const double d_dist =
          cfg.kind == DistanceKind::kHamming
              ? -0.5
              : -1.0 / std::max(d, internal::kMinEuclideanDistance);
      // dD/dF(q) = d_dist * F(x) and dD/dF(x) = d_dist * F(q).
      out.grad_embeddings.row(q) += (c * d_dist) * f.row(x);
      out.grad_embeddings.row(x) += (c * d_dist) * f.row(q);
    }
  }
  out.loss = 1.0 - ap_sum / m;
  return out;
}

}  // namespace apdesc
