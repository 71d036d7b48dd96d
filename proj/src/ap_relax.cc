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

#include "apdesc/ap_relax.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "apdesc/error.h"

namespace apdesc {

BinningConfig BinningConfig::Hamming(int code_length) {
  BinningConfig cfg;
  cfg.bins = code_length;
  cfg.kind = DistanceKind::kHamming;
  cfg.code_length = code_length;
  cfg.Validate();
  return cfg;
}

BinningConfig BinningConfig::Euclidean(int dim, int bins) {
  BinningConfig cfg;
  cfg.bins = bins;
  cfg.kind = DistanceKind::kEuclidean;
  cfg.code_length = dim;
  cfg.Validate();
  return cfg;
}

void BinningConfig::Validate() const {
  Require(bins >= 1, ErrorCode::kConfig, "number of bins must be positive");
  Require(code_length >= 1, ErrorCode::kConfig, "code length must be positive");
  if (kind == DistanceKind::kHamming)
    Require(bins == code_length, ErrorCode::kConfig,
            "Hamming binning needs bins == code length (" + std::to_string(bins) +
                " vs " + std::to_string(code_length) + ")");
}

double HammingDistance(std::span<const double> u, std::span<const double> v) {
  Require(u.size() == v.size(), ErrorCode::kShape, "code length mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  return 0.5 * (static_cast<double>(u.size()) - dot);
}

double EuclideanDistance(std::span<const double> u, std::span<const double> v) {
  Require(u.size() == v.size(), ErrorCode::kShape, "descriptor length mismatch");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  Require(std::abs(std::sqrt(uu) - 1.0) <= 1e-6 && std::abs(std::sqrt(vv) - 1.0) <= 1e-6,
          ErrorCode::kPrecondition, "Euclidean distance expects unit vectors");
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * dot));
}

std::vector<double> SoftBin(double d, const BinningConfig& cfg) {
  const double delta = cfg.delta();
  d = std::clamp(d, 0.0, cfg.max_distance());
  std::vector<double> w(cfg.num_bins());
  for (int k = 0; k <= cfg.bins; ++k)
    w[k] = std::max(0.0, 1.0 - std::abs(d - k * delta) / delta);
  return w;
}

std::vector<double> SoftBinGrad(double d, const BinningConfig& cfg) {
  const double delta = cfg.delta();
  d = std::clamp(d, 0.0, cfg.max_distance());
  // Piece k covers (c_k, c_{k+1}]; d = 0 belongs to piece 0.
  int piece = d <= 0.0 ? 0 : static_cast<int>(std::ceil(d / delta)) - 1;
  piece = std::clamp(piece, 0, cfg.bins - 1);
  std::vector<double> g(cfg.num_bins(), 0.0);
  g[piece] = -1.0 / delta;
  g[piece + 1] = 1.0 / delta;
  return g;
}

namespace {

// The expected contribution of one bin with n items (n_pos relevant) that
// follows H items (a relevant) is
//   n_pos (a + 1) A(n, x) + n_pos (n_pos - 1) B(n, x),   x = H + 1,
// where A = [psi(x + n) - psi(x)] / n and
//       B = [n - x (psi(x + n) - psi(x))] / (n (n - 1)).
// Both are smooth in n; the removable singularities at n = 0 and n = 1 are
// evaluated by Taylor expansion.
constexpr double kSeriesRadius = 2e-3;

struct Smooth {
  double value;
  double d_n;
  double d_x;
};

double Psi(double x) { return boost::math::digamma(x); }
double PolyPsi(int k, double x) {
  return k == 1 ? boost::math::trigamma(x) : boost::math::polygamma(k, x);
}

Smooth TermA(double n, double x) {
  if (n < kSeriesRadius) {
    const double p1 = PolyPsi(1, x), p2 = PolyPsi(2, x), p3 = PolyPsi(3, x),
                 p4 = PolyPsi(4, x), p5 = PolyPsi(5, x);
    return {p1 + n / 2 * p2 + n * n / 6 * p3 + n * n * n / 24 * p4,
            p2 / 2 + n * p3 / 3 + n * n * p4 / 8,
            p2 + n / 2 * p3 + n * n / 6 * p4 + n * n * n / 24 * p5};
  }
  const double r = Psi(x + n) - Psi(x);
  const double r_n = PolyPsi(1, x + n);
  const double r_x = r_n - PolyPsi(1, x);
  return {r / n, (n * r_n - r) / (n * n), r_x / n};
}

Smooth TermB(double n, double x) {
  if (n < kSeriesRadius) {
    const double p1 = PolyPsi(1, x), p2 = PolyPsi(2, x), p3 = PolyPsi(3, x),
                 p4 = PolyPsi(4, x), p5 = PolyPsi(5, x);
    // P = S / n
    const double p = 1 - x * (p1 + n / 2 * p2 + n * n / 6 * p3 + n * n * n / 24 * p4);
    const double p_n = -x * (p2 / 2 + n * p3 / 3 + n * n * p4 / 8);
    const double p_x = -(p1 + n / 2 * p2 + n * n / 6 * p3 + n * n * n / 24 * p4) -
                       x * (p2 + n / 2 * p3 + n * n / 6 * p4 + n * n * n / 24 * p5);
    const double m = n - 1;
    return {p / m, (p_n * m - p) / (m * m), p_x / m};
  }
  if (std::abs(n - 1) < kSeriesRadius) {
    const double e = n - 1, y = x + 1;
    const double p1 = PolyPsi(1, y), p2 = PolyPsi(2, y), p3 = PolyPsi(3, y),
                 p4 = PolyPsi(4, y), p5 = PolyPsi(5, y);
    // Q = S / (n - 1)
    const double series = p1 + e / 2 * p2 + e * e / 6 * p3 + e * e * e / 24 * p4;
    const double q = 1 - x * series;
    const double q_e = -x * (p2 / 2 + e * p3 / 3 + e * e * p4 / 8);
    const double q_x =
        -series - x * (p2 + e / 2 * p3 + e * e / 6 * p4 + e * e * e / 24 * p5);
    return {q / n, (q_e * n - q) / (n * n), q_x / n};
  }
  const double r = Psi(x + n) - Psi(x);
  const double r_n = PolyPsi(1, x + n);
  const double r_x = r_n - PolyPsi(1, x);
  const double s = n - x * r;
  const double s_n = 1 - x * r_n;
  const double s_x = -r - x * r_x;
  const double den = n * (n - 1);
  return {s / den, (s_n * den - s * (2 * n - 1)) / (den * den), s_x / den};
}

// A and B alone. Bins without relevant mass only need these, and empty
// bins (n = 0) reduce to A = psi'(x), B = x psi'(x) - 1.
std::pair<double, double> TermValues(double n, double x) {
  if (n == 0.0) {
    const double t = PolyPsi(1, x);
    return {t, x * t - 1.0};
  }
  return {TermA(n, x).value, TermB(n, x).value};
}

void ValidateHistogram(const DistanceHistogram& h) {
  Require(!h.pos.empty() && h.pos.size() == h.neg.size(), ErrorCode::kShape,
          "histogram needs matching non-empty pos/neg bins");
  double mass = 0.0;
  for (std::size_t k = 0; k < h.pos.size(); ++k) {
    Require(std::isfinite(h.pos[k]) && std::isfinite(h.neg[k]), ErrorCode::kNumeric,
            "non-finite histogram entry");
    Require(h.pos[k] >= 0.0 && h.neg[k] >= 0.0, ErrorCode::kRange,
            "histogram counts must be non-negative");
    mass += h.pos[k];
  }
  Require(mass > 0.0, ErrorCode::kUndefinedMetric,
          "AP is undefined for a histogram without positive mass");
}

}  // namespace

double HistogramAp(const DistanceHistogram& h) {
  ValidateHistogram(h);
  double before_pos = 0.0, before_all = 0.0, total = 0.0, pos_mass = 0.0;
  for (std::size_t k = 0; k < h.pos.size(); ++k) {
    const double p = h.pos[k];
    const double n = p + h.neg[k];
    if (p > 0.0) {
      const double x = before_all + 1.0;
      total += p * (before_pos + 1.0) * TermA(n, x).value +
               p * (p - 1.0) * TermB(n, x).value;
    }
    before_pos += p;
    before_all += n;
    pos_mass += p;
  }
  return total / pos_mass;
}

HistogramApGradient HistogramApGrad(const DistanceHistogram& h) {
  ValidateHistogram(h);
  const std::size_t bins = h.pos.size();
  std::vector<double> own_pos(bins), own_neg(bins), via_a(bins), via_x(bins);
  double before_pos = 0.0, before_all = 0.0, total = 0.0, pos_mass = 0.0;
  for (std::size_t k = 0; k < bins; ++k) {
    const double p = h.pos[k];
    const double n = p + h.neg[k];
    const double x = before_all + 1.0;
    const double a1 = before_pos + 1.0;
    if (p == 0.0) {
      const auto [a, b] = TermValues(n, x);
      own_pos[k] = a1 * a - b;
      before_all += n;
      continue;
    }
    const Smooth ta = TermA(n, x);
    const Smooth tb = TermB(n, x);
    total += p * a1 * ta.value + p * (p - 1.0) * tb.value;
    const double via_n = p * a1 * ta.d_n + p * (p - 1.0) * tb.d_n;
    own_pos[k] = a1 * ta.value + (2.0 * p - 1.0) * tb.value + via_n;
    own_neg[k] = via_n;
    via_a[k] = p * ta.value;
    via_x[k] = p * a1 * ta.d_x + p * (p - 1.0) * tb.d_x;
    before_pos += p;
    before_all += n;
    pos_mass += p;
  }

  HistogramApGradient out;
  out.ap = total / pos_mass;
  out.d_pos.resize(bins);
  out.d_neg.resize(bins);
  // Counts in bin k shift the cumulative counts seen by every later bin.
  double later_a = 0.0, later_x = 0.0;
  for (std::size_t k = bins; k-- > 0;) {
    out.d_pos[k] = (own_pos[k] + later_a + later_x - out.ap) / pos_mass;
    out.d_neg[k] = (own_neg[k] + later_x) / pos_mass;
    later_a += via_a[k];
    later_x += via_x[k];
  }
  return out;
}

RelationMatrix RelationMatrix::FromGroups(std::span<const std::int64_t> groups) {
  const int m = static_cast<int>(groups.size());
  RelationMatrix rel(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      rel.set(i, j,
              i == j ? PairRelation::kIgnore
                     : (groups[i] == groups[j] ? PairRelation::kMatch
                                               : PairRelation::kNonMatch));
  return rel;
}

}  // namespace apdesc
