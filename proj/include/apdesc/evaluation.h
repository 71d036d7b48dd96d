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

#ifndef APDESC_EVALUATION_H_
#define APDESC_EVALUATION_H_

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "apdesc/ap_relax.h"
#include "apdesc/checkpoint.h"
#include "apdesc/dataset.h"
#include "apdesc/model.h"

namespace apdesc {

// Descriptors for the given patches (all patches when `patches` is empty),
// one row each. Inputs go through NormalizeInput; tanh codes are binarized.
Matrix ComputeDescriptors(const DescriptorModel& model, const PatchDataset& dataset,
                          const std::vector<int>& patches = {});

DistanceKind DescriptorDistance(const DescriptorModel& model);

// Sign codes packed 64 per word; distance is a popcount.
class PackedCodes {
 public:
  explicit PackedCodes(const Matrix& codes);
  int Distance(int a, int b) const;
  int rows() const { return rows_; }

 private:
  int rows_;
  int words_;
  std::vector<std::uint64_t> bits_;
};

// Pairwise distances between the rows of `a` and `b`: Euclidean norm of the
// difference, or the integer Hamming distance of the signs.
Matrix PairwiseDistances(const Matrix& a, const Matrix& b, DistanceKind kind);

struct EvalReport {
  std::string task;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<double> per_query_ap;
  std::vector<std::pair<double, double>> pr_curve;  // (recall, precision)
  ConfigEcho echo;

  double metric(const std::string& name) const;
};

// Writes `<prefix>.txt` (key = value lines), and for curve-bearing reports
// `<prefix>_pr.csv` and `<prefix>_plot.dat`.
void WriteReport(const std::string& prefix, const EvalReport& report);

// Fraction of negatives at or below the smallest positive distance that
// accepts at least 95% of positives.
double Fpr95(std::vector<double> pos_distances, const std::vector<double>& neg_distances);

struct PatchPair {
  int a = 0;
  int b = 0;
  bool match = false;
};

using VerificationSet = std::vector<PatchPair>;

VerificationSet SampleVerificationPairs(const PatchDataset& dataset, int positives,
                                        int negatives, std::uint64_t seed);

// Distances ranked ascending (ties by pair order); AP with match = relevant.
double VerificationMap(const std::vector<double>& distances, const VerificationSet& set);

// FPR95 and pair-list AP from descriptors indexed by patch id.
EvalReport EvaluateVerification(const VerificationSet& set, const Matrix& descriptors,
                                DistanceKind kind);

enum class DistractorPolicy { kAll, kOutOfSequenceOnly, kInSequenceOnly };

const char* DistractorPolicyName(DistractorPolicy p);

struct RetrievalProtocol {
  std::vector<int> queries;  // patch indices; empty means every patch with a match
  DistractorPolicy policy = DistractorPolicy::kAll;
};

// Every query ranks all other patches it may see under the policy (its own
// group always included) by distance, ties broken by patch index.
EvalReport RetrievalMap(const PatchDataset& dataset, const Matrix& descriptors,
                        DistanceKind kind, const RetrievalProtocol& protocol = {});

struct Match {
  int i = 0;
  int j = 0;
  double distance = 0;
};

// Pairs that are each other's nearest neighbor; ties go to the lowest index.
std::vector<Match> MutualNnMatch(const Matrix& a, const Matrix& b, DistanceKind kind);

// Precision-recall curve of matches accepted in order of increasing distance
// and its trapezoidal area over recall. The curve starts at recall 0 with
// the precision of the first match.
EvalReport MatchingPrMap(const std::vector<Match>& matches, const std::vector<bool>& correct,
                         int ground_truth_count);

}  // namespace apdesc

#endif  // APDESC_EVALUATION_H_
