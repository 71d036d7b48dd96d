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

// OpenMP batch loss against the single-threaded reference.
//
//   ./build/bench/ap_loss_bench --benchmark_counters_tabular=true
//
// Threads follow OMP_NUM_THREADS.

#include <random>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "apdesc/ap_relax.h"
#include "apdesc/heads.h"

namespace {

apdesc::EmbeddingBatch MakeBatch(int m, int dim) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n(0.0, 1.0);
  apdesc::Matrix raw(m, dim);
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = n(rng);
  apdesc::EmbeddingBatch batch;
  batch.values = apdesc::L2NormalizeRows(raw).unit;
  for (int i = 0; i < m; ++i) batch.groups.push_back(i / 4);
  return batch;
}

void Report(benchmark::State& state, int m, int bins) {
  state.counters["pairs/s"] = benchmark::Counter(static_cast<double>(m) * (m - 1),
                                                 benchmark::Counter::kIsIterationInvariantRate);
  state.counters["bins"] = bins;
  state.counters["threads"] = omp_get_max_threads();
}

void BM_ApLossParallel(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0)), bins = static_cast<int>(state.range(1));
  const apdesc::EmbeddingBatch batch = MakeBatch(m, 128);
  const apdesc::BinningConfig cfg = apdesc::BinningConfig::Euclidean(128, bins);
  for (auto _ : state) benchmark::DoNotOptimize(apdesc::ApLossBatch(batch, cfg));
  Report(state, m, bins);
}

void BM_ApLossSerial(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0)), bins = static_cast<int>(state.range(1));
  const apdesc::EmbeddingBatch batch = MakeBatch(m, 128);
  const apdesc::BinningConfig cfg = apdesc::BinningConfig::Euclidean(128, bins);
  for (auto _ : state) benchmark::DoNotOptimize(apdesc::ApLossBatchSerial(batch, cfg));
  Report(state, m, bins);
}

void Sizes(benchmark::internal::Benchmark* b) {
  for (int m : {64, 256, 1024})
    for (int bins : {10, 25}) b->Args({m, bins});
  b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_ApLossParallel)->Apply(Sizes)->UseRealTime();
BENCHMARK(BM_ApLossSerial)->Apply(Sizes)->UseRealTime();

BENCHMARK_MAIN();
