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

#include "apdesc/ranking.h"

#include <algorithm>
#include <vector>

#include <gtest/gtest.h>

#include "apdesc/error.h"
#include "test_util.h"

namespace apdesc {
namespace {

using testing::AllBinaryLists;
using testing::BruteForceAp;

RankedList List(std::vector<std::uint8_t> rel) { return RankedList(std::move(rel)); }

TEST(RankedListTest, RejectsEmptyAndNonBinary) {
  EXPECT_THROW(List({}), Error);
  EXPECT_THROW(List({1, 2}), Error);
}

TEST(PrecAtKTest, Examples) {
  EXPECT_DOUBLE_EQ(PrecAtK(List({1, 1, 1}), 3), 1.0);
  EXPECT_DOUBLE_EQ(PrecAtK(List({0, 1}), 2), 0.5);
  EXPECT_DOUBLE_EQ(PrecAtK(List({1, 0, 1}), 3), 2.0 / 3.0);
}

TEST(PrecAtKTest, KOutOfRange) {
  try {
    PrecAtK(List({1, 0}), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRange);
  }
  EXPECT_THROW(PrecAtK(List({1, 0}), 0), Error);
}

TEST(ExactApTest, Examples) {
  EXPECT_DOUBLE_EQ(ExactAp(List({1, 1, 1})), 1.0);
  // A single non-match ranked first halves AP.
  EXPECT_DOUBLE_EQ(ExactAp(List({0, 1})), 0.5);
  EXPECT_NEAR(ExactAp(List({1, 0, 1, 0})), 5.0 / 6.0, 1e-15);
}

TEST(ExactApTest, NoRelevantItemIsUndefined) {
  try {
    ExactAp(List({0, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedMetric);
  }
}

TEST(ExactApTest, MatchesBruteForceExhaustively) {
  for (int len = 1; len <= 8; ++len) {
    for (const auto& rel : AllBinaryLists(len)) {
      if (std::count(rel.begin(), rel.end(), 1) == 0) continue;
      EXPECT_NEAR(ExactAp(List(rel)), BruteForceAp(rel), 1e-12);
    }
  }
}

TEST(ExactApTest, MaximalExactlyWhenRelevantFirst) {
  for (int len = 1; len <= 8; ++len) {
    for (const auto& rel : AllBinaryLists(len)) {
      if (std::count(rel.begin(), rel.end(), 1) == 0) continue;
      const bool sorted = std::is_sorted(rel.begin(), rel.end(), std::greater<>());
      const double ap = ExactAp(List(rel));
      if (sorted) {
        EXPECT_DOUBLE_EQ(ap, 1.0);
      } else {
        EXPECT_LT(ap, 1.0);
      }
    }
  }
}

TEST(ExactApTest, MovingRelevantItemUpNeverHurts) {
  for (int len = 2; len <= 8; ++len) {
    for (const auto& rel : AllBinaryLists(len)) {
      if (std::count(rel.begin(), rel.end(), 1) == 0) continue;
      const double before = ExactAp(List(rel));
      for (int i = 1; i < len; ++i) {
        if (rel[i] == 1 && rel[i - 1] == 0) {
          auto swapped = rel;
          std::swap(swapped[i], swapped[i - 1]);
          EXPECT_GE(ExactAp(List(swapped)), before);
        }
      }
    }
  }
}

TiedRankedList Tied(std::vector<TieBin> bins) { return TiedRankedList(std::move(bins)); }

TEST(TieAwareOracleTest, Examples) {
  EXPECT_DOUBLE_EQ(TieAwareApOracle(Tied({{1, 0}, {0, 1}})), 1.0);
  EXPECT_DOUBLE_EQ(TieAwareApOracle(Tied({{1, 1}})), 0.75);
  EXPECT_DOUBLE_EQ(TieAwareApOracle(Tied({{0, 1}, {1, 0}})), 0.5);
}

TEST(TieAwareOracleTest, CapacityAndUndefined) {
  try {
    TieAwareApOracle(Tied({{5, 4}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCapacity);
  }
  EXPECT_NO_THROW(TieAwareApOracle(Tied({{5, 4}}), 9));
  try {
    TieAwareApOracle(Tied({{0, 3}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedMetric);
  }
}

TEST(TieAwareOracleTest, SingletonBinsEqualExactAp) {
  for (int len = 1; len <= 8; ++len) {
    for (const auto& rel : AllBinaryLists(len)) {
      if (std::count(rel.begin(), rel.end(), 1) == 0) continue;
      std::vector<TieBin> bins;
      for (auto r : rel) bins.push_back(r ? TieBin{1, 0} : TieBin{0, 1});
      EXPECT_NEAR(TieAwareApOracle(Tied(bins)), ExactAp(List(rel)), 1e-12);
    }
  }
}

TEST(TieAwareOracleTest, SplittingPureBinsChangesNothing) {
  const std::vector<TieBin> base = {{2, 1}, {0, 3}, {1, 1}};
  const double expected = TieAwareApOracle(Tied(base));
  EXPECT_NEAR(TieAwareApOracle(Tied({{2, 1}, {0, 1}, {0, 2}, {1, 1}})), expected, 1e-12);
  EXPECT_NEAR(TieAwareApOracle(Tied({{1, 0}, {1, 0}, {0, 3}})),
              TieAwareApOracle(Tied({{2, 0}, {0, 3}})), 1e-12);
  EXPECT_NEAR(TieAwareApOracle(Tied({{0, 0}, {2, 1}, {0, 3}, {1, 1}})), expected, 1e-12);
}

TEST(MeanApTest, Examples) {
  std::vector<RankedList> a = {List({1}), List({1})};
  EXPECT_DOUBLE_EQ(MeanAp(a), 1.0);
  std::vector<RankedList> b = {List({1}), List({0, 1})};
  EXPECT_DOUBLE_EQ(MeanAp(b), 0.75);
  std::vector<RankedList> c = {List({1, 0, 1, 0}), List({1, 1})};
  EXPECT_NEAR(MeanAp(c), 11.0 / 12.0, 1e-15);
  EXPECT_THROW(MeanAp(std::vector<RankedList>{}), Error);
}

}  // namespace
}  // namespace apdesc
