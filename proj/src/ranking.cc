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

#include <string>

#include "apdesc/error.h"

namespace apdesc {

RankedList::RankedList(std::vector<std::uint8_t> relevance)
    : relevance_(std::move(relevance)) {
  Require(!relevance_.empty(), ErrorCode::kRange, "ranked list is empty");
  for (std::uint8_t flag : relevance_) {
    Require(flag <= 1, ErrorCode::kRange, "relevance flags must be 0 or 1");
    relevant_count_ += flag;
  }
}

TiedRankedList::TiedRankedList(std::vector<TieBin> bins) : bins_(std::move(bins)) {
  Require(!bins_.empty(), ErrorCode::kRange, "tied ranked list has no bins");
  for (const TieBin& bin : bins_) {
    Require(bin.relevant >= 0 && bin.irrelevant >= 0, ErrorCode::kRange,
            "tie bin counts must be non-negative");
    total_items_ += bin.relevant + bin.irrelevant;
    total_relevant_ += bin.relevant;
  }
}

double PrecAtK(const RankedList& list, std::size_t k) {
  Require(k >= 1 && k <= list.size(), ErrorCode::kRange,
          "Prec@K needs 1 <= K <= " + std::to_string(list.size()) + ", got " +
              std::to_string(k));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += list.relevance()[i];
  return static_cast<double>(hits) / static_cast<double>(k);
}

double ExactAp(const RankedList& list) {
  Require(list.relevant_count() > 0, ErrorCode::kUndefinedMetric,
          "AP is undefined for a query without relevant items");
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list.relevance()[i] == 0) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(list.relevant_count());
}

namespace {

// All placements of `relevant` ones among `size` slots.
std::vector<std::vector<std::uint8_t>> BinArrangements(std::int64_t relevant,
                                                       std::int64_t size) {
  std::vector<std::vector<std::uint8_t>> out;
  std::vector<std::uint8_t> current;
  current.reserve(size);
  auto recurse = [&](auto&& self, std::int64_t ones_left) -> void {
    std::int64_t slots_left = size - static_cast<std::int64_t>(current.size());
    if (slots_left == 0) {
      out.push_back(current);
      return;
    }
    if (ones_left > 0) {
      current.push_back(1);
      self(self, ones_left - 1);
      current.pop_back();
    }
    if (slots_left > ones_left) {
      current.push_back(0);
      self(self, ones_left);
      current.pop_back();
    }
  };
  recurse(recurse, relevant);
  return out;
}

}  // namespace

double TieAwareApOracle(const TiedRankedList& list, std::int64_t max_items) {
  Require(list.total_items() <= max_items, ErrorCode::kCapacity,
          "oracle limited to " + std::to_string(max_items) + " items, got " +
              std::to_string(list.total_items()));
  Require(list.total_relevant() > 0, ErrorCode::kUndefinedMetric,
          "AP is undefined for a query without relevant items");

  std::vector<std::vector<std::vector<std::uint8_t>>> per_bin;
  for (const TieBin& bin : list.bins())
    per_bin.push_back(BinArrangements(bin.relevant, bin.relevant + bin.irrelevant));

  double sum = 0.0;
  std::size_t count = 0;
  std::vector<std::uint8_t> flags;
  auto recurse = [&](auto&& self, std::size_t bin) -> void {
    if (bin == per_bin.size()) {
      sum += ExactAp(RankedList(flags));
      ++count;
      return;
    }
    for (const auto& arrangement : per_bin[bin]) {
      flags.insert(flags.end(), arrangement.begin(), arrangement.end());
      self(self, bin + 1);
      flags.resize(flags.size() - arrangement.size());
    }
  };
  recurse(recurse, 0);
  return sum / static_cast<double>(count);
}

double MeanAp(std::span<const RankedList> lists) {
  Require(!lists.empty(), ErrorCode::kRange, "mAP over an empty set of queries");
  double sum = 0.0;
  for (const RankedList& list : lists) sum += ExactAp(list);
  return sum / static_cast<double>(lists.size());
}

}  // namespace apdesc
