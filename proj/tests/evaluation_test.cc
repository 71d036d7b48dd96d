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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "apdesc/error.h"
#include "apdesc/heads.h"
#include "test_util.h"

namespace apdesc {
namespace {

// Threshold sweep over every observed distance.
double BruteForceFpr95(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<double> candidates = pos;
  candidates.insert(candidates.end(), neg.begin(), neg.end());
  std::sort(candidates.begin(), candidates.end());
  for (double t : candidates) {
    const double tpr = std::count_if(pos.begin(), pos.end(), [&](double d) { return d <= t; }) /
                       static_cast<double>(pos.size());
    if (tpr >= 0.95)
      return std::count_if(neg.begin(), neg.end(), [&](double d) { return d <= t; }) /
             static_cast<double>(neg.size());
  }
  return 1.0;
}

TEST(Fpr95Test, PerfectSeparation) { EXPECT_EQ(Fpr95({0.1, 0.2}, {0.9, 1.0}), 0.0); }

TEST(Fpr95Test, IdenticalDistancesAcceptEverything) {
  EXPECT_EQ(Fpr95(std::vector<double>(10, 0.5), std::vector<double>(7, 0.5)), 1.0);
}

TEST(Fpr95Test, ConstructedFixtureMatchesSweep) {
  std::vector<double> pos, neg;
  for (int i = 0; i < 20; ++i) pos.push_back(0.1 + 0.2 * i / 19.0);
  // tau is the 19th positive; four negatives sit below it.
  for (double v : {0.105, 0.15, 0.22, 0.27}) neg.push_back(v);
  for (int i = 0; i < 16; ++i) neg.push_back(0.31 + 0.01 * i);
  EXPECT_DOUBLE_EQ(Fpr95(pos, neg), 0.2);
  EXPECT_DOUBLE_EQ(BruteForceFpr95(pos, neg), 0.2);
}

TEST(Fpr95Test, RandomCasesMatchSweepAndMonotoneTransforms) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pos(1 + rng() % 40), neg(1 + rng() % 40);
    for (double& v : pos) v = std::round(u(rng) * 20) / 20;  // ties included
    for (double& v : neg) v = std::round((u(rng) + 0.3) * 20) / 20;
    const double f = Fpr95(pos, neg);
    EXPECT_DOUBLE_EQ(f, BruteForceFpr95(pos, neg));
    auto transform = [](std::vector<double> v) {
      for (double& x : v) x = std::exp(3 * x) - 7;
      return v;
    };
    EXPECT_DOUBLE_EQ(Fpr95(transform(pos), transform(neg)), f);
  }
}

TEST(Fpr95Test, EmptySetIsRangeError) {
  try {
    Fpr95({}, {1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRange);
  }
}

TEST(VerificationMapTest, SeparatedPairsScoreOne) {
  const VerificationSet set = {{0, 1, true}, {0, 2, false}, {1, 2, true}};
  EXPECT_DOUBLE_EQ(VerificationMap({0.1, 0.9, 0.2}, set), 1.0);
}

TEST(VerificationMapTest, NonMatchFirstHalvesAp) {
  const VerificationSet set = {{0, 1, false}, {0, 2, true}};
  EXPECT_DOUBLE_EQ(VerificationMap({0.1, 0.2}, set), 0.5);
}

TEST(VerificationMapTest, RandomScoresApproachPositiveFraction) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VerificationSet set;
  std::vector<double> d;
  for (int i = 0; i < 40000; ++i) {
    set.push_back({0, 0, u(rng) < 0.3});
    d.push_back(u(rng));
  }
  EXPECT_NEAR(VerificationMap(d, set), 0.3, 0.01);
}

PatchDataset StructureOnly(const std::vector<int>& group_sizes,
                           const std::vector<int>& group_sequence, int sequences) {
  PatchDataset ds;
  for (int s = 0; s < sequences; ++s) ds.sequences.push_back({"s" + std::to_string(s), "", Split::kTest, {}});
  for (std::size_t g = 0; g < group_sizes.size(); ++g)
    AddGroup(ds, group_sequence[g], static_cast<std::int64_t>(g),
             std::vector<Image>(group_sizes[g], Image(4, 4)));
  return ds;
}

TEST(RetrievalMapTest, DuplicatedGroupsScoreOne) {
  const PatchDataset ds = StructureOnly({3, 3, 2}, {0, 0, 0}, 1);
  Matrix desc(8, 2);
  desc << 1, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1, -1, 0, -1, 0;
  const EvalReport r = RetrievalMap(ds, desc, DistanceKind::kEuclidean);
  EXPECT_DOUBLE_EQ(r.metric("map"), 1.0);
  EXPECT_EQ(r.per_query_ap.size(), 8u);
}

TEST(RetrievalMapTest, RandomEmbeddingsMatchRandomRankingExpectation) {
  // Expected AP of two relevant items placed uniformly among ten.
  double expected = 0;
  int count = 0;
  for (const auto& rel : testing::AllBinaryLists(10)) {
    if (std::count(rel.begin(), rel.end(), 1) != 2) continue;
    expected += testing::BruteForceAp(rel);
    ++count;
  }
  expected /= count;

  std::vector<int> sizes = {3}, seqs = {0};
  for (int i = 0; i < 8; ++i) {
    sizes.push_back(1);
    seqs.push_back(0);
  }
  const PatchDataset ds = StructureOnly(sizes, seqs, 1);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  double sum = 0, sq = 0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    Matrix desc(11, 4);
    for (int i = 0; i < desc.size(); ++i) desc.data()[i] = n(rng);
    RetrievalProtocol p;
    p.queries = {0};
    const double ap = RetrievalMap(ds, desc, DistanceKind::kEuclidean, p).metric("map");
    sum += ap;
    sq += ap * ap;
  }
  const double mean = sum / trials;
  const double se = std::sqrt((sq / trials - mean * mean) / trials);
  EXPECT_NEAR(mean, expected, 4 * se);
}

TEST(RetrievalMapTest, InSequenceDistractorsAreHarder) {
  // Sequence 0: queries and near-duplicate distractors; sequence 1: far away.
  const PatchDataset ds = StructureOnly({2, 2, 2, 2}, {0, 0, 1, 1}, 2);
  Matrix desc(8, 1);
  desc << 0.0, 0.3, 0.1, 0.35, 10, 11, 20, 21;
  RetrievalProtocol in, out;
  in.queries = out.queries = {0, 1, 2, 3};
  in.policy = DistractorPolicy::kInSequenceOnly;
  out.policy = DistractorPolicy::kOutOfSequenceOnly;
  const double in_map = RetrievalMap(ds, desc, DistanceKind::kEuclidean, in).metric("map");
  const double out_map = RetrievalMap(ds, desc, DistanceKind::kEuclidean, out).metric("map");
  EXPECT_LT(in_map, 1.0);
  EXPECT_DOUBLE_EQ(out_map, 1.0);
  EXPECT_LE(in_map, out_map);
}

TEST(RetrievalMapTest, QueryWithoutMatchIsRejected) {
  const PatchDataset ds = StructureOnly({2, 1}, {0, 0}, 1);
  RetrievalProtocol p;
  p.queries = {2};
  EXPECT_THROW(RetrievalMap(ds, Matrix::Zero(3, 2), DistanceKind::kEuclidean, p), Error);
}

TEST(RetrievalMapTest, TierStratifiedMetrics) {
  PatchDataset ds = StructureOnly({2, 2}, {0, 0}, 1);
  ds.patches[0].tier = ds.patches[2].tier = "e";
  ds.patches[1].tier = ds.patches[3].tier = "h";
  Matrix desc(4, 1);
  desc << 0, 1, 5, 6;
  const EvalReport r = RetrievalMap(ds, desc, DistanceKind::kEuclidean);
  EXPECT_DOUBLE_EQ(r.metric("map_tier_e"), 1.0);
  EXPECT_DOUBLE_EQ(r.metric("map_tier_h"), 1.0);
}

TEST(RetrievalMapTest, PackedHammingMatchesSignCodeDistances) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<int> sizes(30, 3), seqs(30, 0);
  const PatchDataset ds = StructureOnly(sizes, seqs, 1);
  Matrix codes(90, 70);  // more than one 64-bit word
  for (int i = 0; i < codes.size(); ++i) codes.data()[i] = u(rng);
  const Matrix signs = Binarize(codes);
  const EvalReport r = RetrievalMap(ds, signs, DistanceKind::kHamming);
  for (int q = 0; q < 90; ++q) {
    std::vector<std::pair<double, int>> ranked;
    for (int x = 0; x < 90; ++x)
      if (x != q)
        ranked.emplace_back(HammingDistance(std::span<const double>(signs.row(q).data(), 70),
                                            std::span<const double>(signs.row(x).data(), 70)),
                            x);
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::uint8_t> rel;
    for (const auto& [d, x] : ranked) rel.push_back(ds.patches[x].group == ds.patches[q].group);
    EXPECT_NEAR(r.per_query_ap[q], testing::BruteForceAp(rel), 1e-12);
  }
}

TEST(MutualNnTest, RecoversPermutation) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix a(20, 5);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  std::vector<int> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix b(20, 5);
  for (int i = 0; i < 20; ++i) b.row(perm[i]) = a.row(i);
  const std::vector<Match> m = MutualNnMatch(a, b, DistanceKind::kEuclidean);
  ASSERT_EQ(m.size(), 20u);
  for (const Match& x : m) {
    EXPECT_EQ(x.j, perm[x.i]);
    EXPECT_EQ(x.distance, 0.0);
  }
}

TEST(MutualNnTest, TieGoesToLowestIndex) {
  Matrix a(1, 1), b(2, 1);
  a << 0;
  b << 1, -1;
  const std::vector<Match> m = MutualNnMatch(a, b, DistanceKind::kEuclidean);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].j, 0);
}

TEST(MutualNnTest, OneWayNeighborIsExcluded) {
  Matrix a(3, 1), b(3, 1);
  a << 0, 1, 10;
  b << 0.9, 5, 11;
  // a0 -> b0 but b0 -> a1; a1 <-> b0; a2 <-> b2; b1 -> a1 only one way.
  const std::vector<Match> m = MutualNnMatch(a, b, DistanceKind::kEuclidean);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].i, 1);
  EXPECT_EQ(m[0].j, 0);
  EXPECT_EQ(m[1].i, 2);
  EXPECT_EQ(m[1].j, 2);
}

TEST(MutualNnTest, SwappingSetsTransposesPairs) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix a(15, 3), b(12, 3);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  for (int i = 0; i < b.size(); ++i) b.data()[i] = n(rng);
  std::set<std::pair<int, int>> ab, ba;
  for (const Match& m : MutualNnMatch(a, b, DistanceKind::kEuclidean)) ab.insert({m.i, m.j});
  for (const Match& m : MutualNnMatch(b, a, DistanceKind::kEuclidean)) ba.insert({m.j, m.i});
  EXPECT_EQ(ab, ba);
  EXPECT_FALSE(ab.empty());
}

std::vector<Match> Ordered(int count) {
  std::vector<Match> m;
  for (int k = 0; k < count; ++k) m.push_back({k, k, 0.1 * (k + 1)});
  return m;
}

TEST(MatchingPrMapTest, PerfectMatchingHasUnitArea) {
  const EvalReport r = MatchingPrMap(Ordered(5), std::vector<bool>(5, true), 5);
  EXPECT_DOUBLE_EQ(r.metric("pr_map"), 1.0);
}

TEST(MatchingPrMapTest, NoCorrectMatchHasZeroArea) {
  const EvalReport r = MatchingPrMap(Ordered(5), std::vector<bool>(5, false), 5);
  EXPECT_DOUBLE_EQ(r.metric("pr_map"), 0.0);
}

TEST(MatchingPrMapTest, InterleavedHalfCorrectMatchesHandTrapezoid) {
  // Points: (0,1) (1/2,1) (1/2,1/2) (1,2/3) (1,1/2).
  const EvalReport r = MatchingPrMap(Ordered(4), {true, false, true, false}, 2);
  EXPECT_NEAR(r.metric("pr_map"), 0.5 + 0.5 * (0.5 + 2.0 / 3.0) / 2, 1e-12);
  ASSERT_EQ(r.pr_curve.size(), 5u);
  EXPECT_DOUBLE_EQ(r.pr_curve[3].second, 2.0 / 3.0);
}

TEST(MatchingPrMapTest, MatchesAreSortedByDistance) {
  std::vector<Match> m = Ordered(4);
  std::reverse(m.begin(), m.end());
  const EvalReport r = MatchingPrMap(m, {false, true, false, true}, 2);
  EXPECT_NEAR(r.metric("pr_map"), 0.5 + 0.5 * (0.5 + 2.0 / 3.0) / 2, 1e-12);
}

TEST(MatchingPrMapTest, NoGroundTruthIsUndefined) {
  try {
    MatchingPrMap(Ordered(2), {true, true}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedMetric);
  }
}

TEST(ReportTest, WritesMetricsAndCurves) {
  namespace fs = std::filesystem;
  const fs::path prefix = fs::temp_directory_path() / "apdesc_report_test";
  EvalReport r = MatchingPrMap(Ordered(3), {true, true, false}, 2);
  r.echo = {{"model.dim", "16"}};
  WriteReport(prefix.string(), r);
  std::ifstream txt(prefix.string() + ".txt");
  std::string all((std::istreambuf_iterator<char>(txt)), {});
  EXPECT_NE(all.find("task = matching"), std::string::npos);
  EXPECT_NE(all.find("pr_map = 1"), std::string::npos);
  EXPECT_NE(all.find("config.model.dim = 16"), std::string::npos);
  std::ifstream csv(prefix.string() + "_pr.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "recall,precision");
  EXPECT_TRUE(fs::exists(prefix.string() + "_plot.dat"));
  for (const char* suffix : {".txt", "_pr.csv", "_plot.dat"}) fs::remove(prefix.string() + suffix);
}

}  // namespace
}  // namespace apdesc
