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

#include "apdesc/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "apdesc/ap_relax.h"
#include "apdesc/error.h"
#include "apdesc/heads.h"
#include "apdesc/model.h"
#include "apdesc/spatial_transformer.h"

namespace apdesc {

namespace {

using Objective = std::function<double(const std::vector<double>&)>;

// Central differences at steps h and h/2; a coordinate whose two estimates
// disagree by more than kink_tol sits on a kink and is skipped.
GradcheckResult Compare(const std::string& name, const Objective& f, std::vector<double> x,
                        std::vector<double> analytic, const std::vector<std::size_t>& coords,
                        double h, double kink_tol, double tolerance,
                        const GradcheckOptions& options) {
  if (options.corrupt == name)
    for (double& g : analytic) g = 1.05 * g + 1e-3;
  std::vector<double> numeric(coords.size());
  double scale = 1e-12;
  for (std::size_t n = 0; n < coords.size(); ++n) {
    const std::size_t i = coords[n];
    const double x0 = x[i];
    auto central = [&](double step) {
      x[i] = x0 + step;
      const double up = f(x);
      x[i] = x0 - step;
      const double down = f(x);
      x[i] = x0;
      return (up - down) / (2 * step);
    };
    const double full = central(h);
    const double half = central(h / 2);
    numeric[n] = std::abs(full - half) > kink_tol ? std::nan("") : half;
    if (!std::isnan(numeric[n])) scale = std::max(scale, std::abs(numeric[n]));
  }
  GradcheckResult r;
  r.name = name;
  r.tolerance = tolerance;
  for (std::size_t n = 0; n < coords.size(); ++n) {
    if (std::isnan(numeric[n])) {
      ++r.kinks;
      continue;
    }
    ++r.compared;
    r.max_relative_error =
        std::max(r.max_relative_error, std::abs(analytic[coords[n]] - numeric[n]) / scale);
  }
  return r;
}

std::vector<std::size_t> AllCoords(std::size_t n) {
  std::vector<std::size_t> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = i;
  return c;
}

GradcheckResult CheckHistogramAp(const GradcheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  const int bins = 9;
  std::vector<double> x(2 * bins);
  for (double& v : x) v = u(rng);
  auto split = [&](const std::vector<double>& v) {
    DistanceHistogram h;
    h.pos.assign(v.begin(), v.begin() + bins);
    h.neg.assign(v.begin() + bins, v.end());
    return h;
  };
  const HistogramApGradient g = HistogramApGrad(split(x));
  std::vector<double> analytic = g.d_pos;
  analytic.insert(analytic.end(), g.d_neg.begin(), g.d_neg.end());
  return Compare("ap_relax.histogram", [&](const auto& v) { return HistogramAp(split(v)); }, x,
                 analytic, AllCoords(x.size()), 1e-5, 1e-6, 1e-6, options);
}

GradcheckResult CheckBatchLoss(const GradcheckOptions& options, DistanceKind kind) {
  std::mt19937_64 rng(options.seed + 1);
  std::normal_distribution<double> n(0.0, 1.0);
  const int m = 12, dim = 8;
  Matrix raw(m, dim);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < dim; ++j) raw(i, j) = n(rng);
  EmbeddingBatch batch;
  for (int i = 0; i < m; ++i) batch.groups.push_back(i / 3);
  const BinningConfig cfg = kind == DistanceKind::kHamming ? BinningConfig::Hamming(dim)
                                                           : BinningConfig::Euclidean(dim, 10);
  // Map free parameters onto the head's output space so every probe point
  // is a valid descriptor.
  auto head = [&](const Matrix& r) {
    return kind == DistanceKind::kHamming ? TanhRows(r) : L2NormalizeRows(r).unit;
  };
  auto to_matrix = [&](const std::vector<double>& v) {
    return Matrix(Eigen::Map<const Matrix>(v.data(), m, dim));
  };
  std::vector<double> x(raw.data(), raw.data() + raw.size());
  batch.values = head(raw);
  const ApLossResult res = ApLossBatch(batch, cfg);
  const Matrix grad_raw = kind == DistanceKind::kHamming
                              ? TanhBackward(batch.values, res.grad_embeddings)
                              : L2NormalizeBackward(L2NormalizeRows(raw), res.grad_embeddings);
  std::vector<double> analytic(grad_raw.data(), grad_raw.data() + grad_raw.size());
  auto f = [&](const std::vector<double>& v) {
    EmbeddingBatch b = batch;
    b.values = head(to_matrix(v));
    return ApLossBatch(b, cfg).loss;
  };
  const std::string name =
      kind == DistanceKind::kHamming ? "ap_relax.batch_hamming" : "ap_relax.batch_euclidean";
  return Compare(name, f, x, analytic, AllCoords(x.size()), 1e-6, 1e-5, 1e-5, options);
}

GradcheckResult CheckSampler(const GradcheckOptions& options) {
  std::mt19937_64 rng(options.seed + 2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Image image(12, 12), upstream(8, 8);
  for (double& v : image.pixels) v = u(rng);
  for (double& v : upstream.pixels) v = u(rng);
  std::vector<double> x = {0.8, 0.1, 0.05, -0.15, 0.9, -0.1};
  for (double& v : x) v += 0.05 * u(rng);
  auto theta_of = [](const std::vector<double>& v) {
    AffineParams p;
    std::copy(v.begin(), v.end(), p.theta.begin());
    return p;
  };
  auto f = [&](const std::vector<double>& v) {
    const Image out = SampleReplicate(image, AffineGrid(theta_of(v), 8));
    double s = 0;
    for (std::size_t i = 0; i < out.pixels.size(); ++i) s += out.pixels[i] * upstream.pixels[i];
    return s;
  };
  const SampleGradients g = SampleBackward(image, AffineGrid(theta_of(x), 8), upstream);
  std::vector<double> analytic(g.grad_theta.begin(), g.grad_theta.end());
  return Compare("st.theta", f, x, analytic, AllCoords(6), 1e-7, 1e-3, 1e-4, options);
}

GradcheckResult CheckModel(const GradcheckOptions& options, const std::string& name,
                           const ModelConfig& config) {
  std::mt19937_64 rng(options.seed + 3);
  std::normal_distribution<double> n(0.0, 1.0);
  DescriptorModel base(config, options.seed);
  std::vector<double> x(base.params().begin(), base.params().end());
  // Zero biases put ReLU inputs exactly on the kink; move them off it.
  for (const ParamSegment& seg : base.segments()) {
    if (seg.name == "st.fc.b") continue;
    const double sd = seg.name.ends_with(".b") ? 0.05 : (seg.name == "st.fc.w" ? 0.01 : 0.0);
    for (std::size_t i = 0; i < seg.size; ++i) x[seg.offset + i] += sd * n(rng);
  }
  const int side = config.input_size(), m = 3;
  std::vector<Image> batch(m, Image(side, side));
  for (Image& img : batch)
    for (double& v : img.pixels) v = n(rng);
  Matrix probe(m, config.output_dim);
  for (int i = 0; i < probe.size(); ++i) probe.data()[i] = n(rng);

  auto f = [&](const std::vector<double>& v) {
    const DescriptorModel model = DescriptorModel::FromParameters(config, options.seed, v);
    return (model.Embed(batch).array() * probe.array()).sum();
  };
  const DescriptorModel model = DescriptorModel::FromParameters(config, options.seed, x);
  const ForwardResult fwd = model.Forward(batch);
  const std::vector<double> analytic = model.Backward(fwd.cache, probe);

  // A few coordinates from every segment keep the check fast on large layers.
  std::vector<std::size_t> coords;
  for (const ParamSegment& seg : base.segments()) {
    const std::size_t take = std::min<std::size_t>(seg.size, 12);
    std::uniform_int_distribution<std::size_t> pick(0, seg.size - 1);
    for (std::size_t k = 0; k < take; ++k)
      coords.push_back(seg.offset + (take == seg.size ? k : pick(rng)));
  }
  return Compare(name, f, x, analytic, coords, 1e-6, 1e-4, 1e-4, options);
}

ModelConfig SmallModel(Architecture arch, Head head, bool st) {
  ModelConfig c;
  c.architecture = arch;
  c.head = head;
  c.output_dim = 8;
  c.patch_size = 16;
  c.hidden_dim = 16;
  c.conv_channels1 = 4;
  c.conv_channels2 = 4;
  c.spatial_transformer = st;
  c.st.input_size = 20;
  c.st.output_size = 16;
  return c;
}

}  // namespace

const std::vector<GradcheckEntry>& GradcheckRegistry() {
  static const std::vector<GradcheckEntry> registry = [] {
    std::vector<GradcheckEntry> r;
    r.push_back({"ap_relax.histogram", CheckHistogramAp});
    r.push_back({"ap_relax.batch_euclidean",
                 [](const GradcheckOptions& o) { return CheckBatchLoss(o, DistanceKind::kEuclidean); }});
    r.push_back({"ap_relax.batch_hamming",
                 [](const GradcheckOptions& o) { return CheckBatchLoss(o, DistanceKind::kHamming); }});
    r.push_back({"st.theta", CheckSampler});
    for (Architecture a : {Architecture::kLinear, Architecture::kMlp2, Architecture::kSmallConv}) {
      for (Head h : {Head::kUnitNorm, Head::kTanhCode}) {
        const std::string name =
            std::string("model.") + ArchitectureName(a) + "." + HeadName(h);
        r.push_back({name, [=](const GradcheckOptions& o) {
                       return CheckModel(o, name, SmallModel(a, h, false));
                     }});
      }
    }
    r.push_back({"model.smallconv.unitnorm.st", [](const GradcheckOptions& o) {
                   return CheckModel(o, "model.smallconv.unitnorm.st",
                                     SmallModel(Architecture::kSmallConv, Head::kUnitNorm, true));
                 }});
    return r;
  }();
  return registry;
}

std::vector<GradcheckResult> RunGradchecks(const GradcheckOptions& options,
                                           const std::vector<std::string>& only) {
  if (!options.corrupt.empty()) {
    const auto& reg = GradcheckRegistry();
    Require(std::any_of(reg.begin(), reg.end(),
                        [&](const GradcheckEntry& e) { return e.name == options.corrupt; }),
            ErrorCode::kConfig, "unknown gradient check '" + options.corrupt + "'");
  }
  std::vector<GradcheckResult> out;
  for (const GradcheckEntry& e : GradcheckRegistry())
    if (only.empty() || std::find(only.begin(), only.end(), e.name) != only.end())
      out.push_back(e.run(options));
  return out;
}

std::string FormatGradcheck(const GradcheckResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "check=%s status=%s max_rel_err=%.3e tol=%.1e compared=%zu kinks=%zu",
                r.name.c_str(), r.passed() ? "pass" : "fail", r.max_relative_error, r.tolerance,
                r.compared, r.kinks);
  return buf;
}

}  // namespace apdesc
