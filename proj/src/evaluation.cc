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

#include "apdesc/evaluation.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "apdesc/error.h"
#include "apdesc/heads.h"
#include "apdesc/ranking.h"

namespace apdesc {

namespace {

constexpr int kEmbedChunk = 256;

double ApOfRanking(const std::vector<double>& distances, const std::vector<std::uint8_t>& rel) {
  std::vector<int> order(distances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return distances[x] < distances[y]; });
  std::vector<std::uint8_t> ranked(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) ranked[k] = rel[order[k]];
  return ExactAp(RankedList(std::move(ranked)));
}

}  // namespace

DistanceKind DescriptorDistance(const DescriptorModel& model) {
  return model.config().head == Head::kTanhCode ? DistanceKind::kHamming
                                                : DistanceKind::kEuclidean;
}

Matrix ComputeDescriptors(const DescriptorModel& model, const PatchDataset& dataset,
                          const std::vector<int>& patches) {
  std::vector<int> ids = patches;
  if (ids.empty()) {
    ids.resize(dataset.patches.size());
    std::iota(ids.begin(), ids.end(), 0);
  }
  Matrix out(static_cast<Eigen::Index>(ids.size()), model.output_dim());
  for (std::size_t start = 0; start < ids.size(); start += kEmbedChunk) {
    const std::size_t end = std::min(ids.size(), start + kEmbedChunk);
    std::vector<Image> batch;
    for (std::size_t k = start; k < end; ++k)
      batch.push_back(NormalizeInput(dataset.patches[ids[k]].image));
    out.middleRows(start, end - start) = model.Embed(batch);
  }
  if (model.config().head == Head::kTanhCode) out = Binarize(out);
  return out;
}

PackedCodes::PackedCodes(const Matrix& codes)
    : rows_(static_cast<int>(codes.rows())), words_(static_cast<int>((codes.cols() + 63) / 64)) {
  bits_.assign(static_cast<std::size_t>(rows_) * words_, 0);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < codes.cols(); ++c)
      if (codes(r, c) >= 0) bits_[r * words_ + c / 64] |= std::uint64_t{1} << (c % 64);
}

int PackedCodes::Distance(int a, int b) const {
  int d = 0;
  for (int w = 0; w < words_; ++w) d += std::popcount(bits_[a * words_ + w] ^ bits_[b * words_ + w]);
  return d;
}

Matrix PairwiseDistances(const Matrix& a, const Matrix& b, DistanceKind kind) {
  Require(a.cols() == b.cols(), ErrorCode::kShape, "descriptor dimensions differ");
  Matrix d(a.rows(), b.rows());
  if (kind == DistanceKind::kHamming) {
    Matrix both(a.rows() + b.rows(), a.cols());
    both << a, b;
    const PackedCodes codes(both);
    const int offset = static_cast<int>(a.rows());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(a.rows()); ++i)
      for (int j = 0; j < b.rows(); ++j) d(i, j) = codes.Distance(i, offset + j);
  } else {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(a.rows()); ++i)
      for (int j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).norm();
  }
  return d;
}

double EvalReport::metric(const std::string& name) const {
  for (const auto& [key, value] : metrics)
    if (key == name) return value;
  Fail(ErrorCode::kConfig, "report '" + task + "' has no metric '" + name + "'");
}

void WriteReport(const std::string& prefix, const EvalReport& report) {
  std::ofstream os(prefix + ".txt");
  Require(os.good(), ErrorCode::kFormat, "cannot write report '" + prefix + ".txt'");
  os.precision(10);
  os << "task = " << report.task << "\n";
  for (const auto& [key, value] : report.metrics) os << key << " = " << value << "\n";
  os << "queries = " << report.per_query_ap.size() << "\n";
  for (const auto& [key, value] : report.echo) os << "config." << key << " = " << value << "\n";
  if (report.pr_curve.empty()) return;
  std::ofstream csv(prefix + "_pr.csv");
  std::ofstream plot(prefix + "_plot.dat");
  Require(csv.good() && plot.good(), ErrorCode::kFormat, "cannot write curve files");
  csv.precision(10);
  plot.precision(10);
  csv << "recall,precision\n";
  plot << "# recall precision\n";
  for (const auto& [r, p] : report.pr_curve) {
    csv << r << "," << p << "\n";
    plot << r << " " << p << "\n";
  }
}

double Fpr95(std::vector<double> pos, const std::vector<double>& neg) {
  Require(!pos.empty() && !neg.empty(), ErrorCode::kRange,
          "FPR95 needs positive and negative distances");
  std::sort(pos.begin(), pos.end());
  const std::size_t k = (95 * pos.size() + 99) / 100;  // ceil(0.95 P) in integers
  const double tau = pos[k - 1];
  const auto accepted = std::count_if(neg.begin(), neg.end(), [&](double d) { return d <= tau; });
  return static_cast<double>(accepted) / static_cast<double>(neg.size());
}

VerificationSet SampleVerificationPairs(const PatchDataset& dataset, int positives,
                                        int negatives, std::uint64_t seed) {
  std::vector<int> multi;
  for (std::size_t g = 0; g < dataset.groups.size(); ++g)
    if (dataset.groups[g].patches.size() >= 2) multi.push_back(static_cast<int>(g));
  Require(!multi.empty(), ErrorCode::kPrecondition, "no group has two patches");
  Require(dataset.groups.size() >= 2, ErrorCode::kPrecondition, "need two groups");
  std::mt19937_64 rng(seed);
  VerificationSet set;
  for (int k = 0; k < positives; ++k) {
    const Group& g = dataset.groups[multi[rng() % multi.size()]];
    const std::size_t a = rng() % g.patches.size();
    std::size_t b = rng() % (g.patches.size() - 1);
    if (b >= a) ++b;
    set.push_back({g.patches[a], g.patches[b], true});
  }
  const std::size_t n = dataset.patches.size();
  for (int k = 0; k < negatives;) {
    const int a = static_cast<int>(rng() % n), b = static_cast<int>(rng() % n);
    if (dataset.patches[a].group == dataset.patches[b].group) continue;
    set.push_back({a, b, false});
    ++k;
  }
  return set;
}

double VerificationMap(const std::vector<double>& distances, const VerificationSet& set) {
  Require(distances.size() == set.size(), ErrorCode::kShape, "one distance per pair expected");
  std::vector<std::uint8_t> rel(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) rel[i] = set[i].match ? 1 : 0;
  return ApOfRanking(distances, rel);
}

EvalReport EvaluateVerification(const VerificationSet& set, const Matrix& descriptors,
                                DistanceKind kind) {
  std::vector<double> distances(set.size()), pos, neg;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const Matrix d = PairwiseDistances(descriptors.row(set[k].a), descriptors.row(set[k].b), kind);
    distances[k] = d(0, 0);
    (set[k].match ? pos : neg).push_back(distances[k]);
  }
  EvalReport report;
  report.task = "verification";
  report.metrics = {{"fpr95", Fpr95(pos, neg)},
                    {"pair_ap", VerificationMap(distances, set)},
                    {"positives", static_cast<double>(pos.size())},
                    {"negatives", static_cast<double>(neg.size())}};
  return report;
}

const char* DistractorPolicyName(DistractorPolicy p) {
  switch (p) {
    case DistractorPolicy::kAll:
      return "all";
    case DistractorPolicy::kOutOfSequenceOnly:
      return "out_of_sequence";
    case DistractorPolicy::kInSequenceOnly:
      return "in_sequence";
  }
  return "?";
}

EvalReport RetrievalMap(const PatchDataset& dataset, const Matrix& descriptors,
                        DistanceKind kind, const RetrievalProtocol& protocol) {
  const int n = static_cast<int>(dataset.patches.size());
  Require(descriptors.rows() == n, ErrorCode::kShape, "one descriptor per patch expected");
  std::vector<int> queries = protocol.queries;
  if (queries.empty()) {
    for (int q = 0; q < n; ++q)
      if (dataset.groups[dataset.patches[q].group].patches.size() >= 2) queries.push_back(q);
  }
  for (int q : queries)
    Require(q >= 0 && q < n && dataset.groups[dataset.patches[q].group].patches.size() >= 2,
            ErrorCode::kPrecondition,
            "retrieval query " + std::to_string(q) + " has no match in its database");

  const Matrix dist = PairwiseDistances(descriptors, descriptors, kind);
  std::vector<double> ap(queries.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (int k = 0; k < static_cast<int>(queries.size()); ++k) {
    const int q = queries[k];
    const int group = dataset.patches[q].group;
    const int seq = dataset.sequence_of(q);
    std::vector<double> d;
    std::vector<std::uint8_t> rel;
    for (int x = 0; x < n; ++x) {
      if (x == q) continue;
      const bool match = dataset.patches[x].group == group;
      if (!match) {
        const bool same_seq = dataset.sequence_of(x) == seq;
        if (protocol.policy == DistractorPolicy::kOutOfSequenceOnly && same_seq) continue;
        if (protocol.policy == DistractorPolicy::kInSequenceOnly && !same_seq) continue;
      }
      d.push_back(dist(q, x));
      rel.push_back(match ? 1 : 0);
    }
    ap[k] = ApOfRanking(d, rel);
  }

  EvalReport report;
  report.task = "retrieval";
  report.per_query_ap = ap;
  double sum = 0;
  std::map<std::string, std::pair<double, int>> tiers;
  for (std::size_t k = 0; k < ap.size(); ++k) {
    sum += ap[k];
    const std::string& tier = dataset.patches[queries[k]].tier;
    if (!tier.empty()) {
      tiers[tier].first += ap[k];
      ++tiers[tier].second;
    }
  }
  report.metrics.emplace_back("map", sum / static_cast<double>(ap.size()));
  for (const auto& [tier, acc] : tiers)
    report.metrics.emplace_back("map_tier_" + tier, acc.first / acc.second);
  report.echo.emplace_back("distractor_policy", DistractorPolicyName(protocol.policy));
  return report;
}

std::vector<Match> MutualNnMatch(const Matrix& a, const Matrix& b, DistanceKind kind) {
  Require(a.rows() > 0 && b.rows() > 0, ErrorCode::kPrecondition, "empty descriptor set");
  const Matrix d = PairwiseDistances(a, b, kind);
  std::vector<int> best_b(a.rows()), best_a(b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < b.rows(); ++j)
      if (d(i, j) < d(i, best)) best = j;
    best_b[i] = best;
  }
  for (int j = 0; j < b.rows(); ++j) {
    int best = 0;
    for (int i = 1; i < a.rows(); ++i)
      if (d(i, j) < d(best, j)) best = i;
    best_a[j] = best;
  }
  std::vector<Match> out;
  for (int i = 0; i < a.rows(); ++i)
    if (best_a[best_b[i]] == i) out.push_back({i, best_b[i], d(i, best_b[i])});
  return out;
}

EvalReport MatchingPrMap(const std::vector<Match>& matches, const std::vector<bool>& correct,
                         int ground_truth_count) {
  Require(ground_truth_count > 0, ErrorCode::kUndefinedMetric,
          "matching PR needs at least one ground-truth correspondence");
  Require(correct.size() == matches.size(), ErrorCode::kShape, "one label per match expected");
  std::vector<int> order(matches.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return matches[x].distance < matches[y].distance;
  });
  EvalReport report;
  report.task = "matching";
  double area = 0, tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    tp += correct[order[k]] ? 1 : 0;
    const double recall = tp / ground_truth_count;
    const double precision = tp / static_cast<double>(k + 1);
    if (k == 0) report.pr_curve.emplace_back(0.0, precision);
    const auto [r0, p0] = report.pr_curve.back();
    area += (recall - r0) * 0.5 * (precision + p0);
    report.pr_curve.emplace_back(recall, precision);
  }
  report.metrics = {{"pr_map", area},
                    {"matches", static_cast<double>(matches.size())},
                    {"correct", tp},
                    {"ground_truth", static_cast<double>(ground_truth_count)}};
  return report;
}

}  // namespace apdesc
