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

#ifndef APDESC_RANKING_H_
#define APDESC_RANKING_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace apdesc {

// Binary relevance flags of a database ordered by increasing distance to
// the query. Non-empty, flags are 0 or 1.
class RankedList {
 public:
  explicit RankedList(std::vector<std::uint8_t> relevance);

  std::span<const std::uint8_t> relevance() const { return relevance_; }
  std::size_t size() const { return relevance_.size(); }
  std::size_t relevant_count() const { return relevant_count_; }

 private:
  std::vector<std::uint8_t> relevance_;
  std::size_t relevant_count_ = 0;
};

// One integer-distance tie group.
struct TieBin {
  std::int64_t relevant = 0;
  std::int64_t irrelevant = 0;
};

// Ranked list whose items are only ordered up to ties; bins are ordered by
// increasing distance.
class TiedRankedList {
 public:
  explicit TiedRankedList(std::vector<TieBin> bins);

  std::span<const TieBin> bins() const { return bins_; }
  std::int64_t total_items() const { return total_items_; }
  std::int64_t total_relevant() const { return total_relevant_; }

 private:
  std::vector<TieBin> bins_;
  std::int64_t total_items_ = 0;
  std::int64_t total_relevant_ = 0;
};

// Fraction of relevant items among the first k. Requires 1 <= k <= size.
double PrecAtK(const RankedList& list, std::size_t k);

// Average of Prec@K over the positions of relevant items. Throws
// kUndefinedMetric when the list has no relevant item.
double ExactAp(const RankedList& list);

// Mean of ExactAp over every distinct within-bin arrangement of relevant and
// irrelevant items, enumerated exhaustively. This is the ground truth for
// the closed-form histogram AP; it refuses lists longer than `max_items`.
double TieAwareApOracle(const TiedRankedList& list, std::int64_t max_items = 8);

// Unweighted mean of ExactAp.
double MeanAp(std::span<const RankedList> lists);

}  // namespace apdesc

#endif  // APDESC_RANKING_H_
