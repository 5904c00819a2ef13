// Copyright 2026 The parasearch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef PARASEARCH_HETERO_H_
#define PARASEARCH_HETERO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "parasearch/catalog.h"
#include "parasearch/costsim.h"
#include "parasearch/memest.h"
#include "parasearch/modes.h"
#include "parasearch/pareto.h"
#include "parasearch/strategy.h"

namespace parasearch {

/// Latency of one stage for one microbatch: compute `t` and p2p `h`.
struct StageTime {
  double t = 0;
  double h = 0;
};
using StageTimes = std::vector<StageTime>;

/// sum_i (t_i + h_i) + (K - 1) * max_i (t_i + h_i).
double hetero_pipeline_time(const StageTimes& stages, int64_t K);

/// Makespan of the recurrence F(i, j) = max(F(i-1, j), F(i, j-1)) + t_i + h_i
/// over P stages and K microbatches.
double simulate_pipeline_schedule(const StageTimes& stages, int64_t K);

/// Per-type stage counts of a labeling. Types listed in `type_order` come
/// first in that order; any others follow sorted by name.
std::vector<TypeCount> canonicalize_partition(const std::vector<std::string>& labeling,
                                              const std::vector<std::string>& type_order = {});

/// Every (m_i, n_i) with sum m_i = P, m_i <= floor(l_i / (D*T)), n_i >= 1 on
/// used types and sum m_i * n_i = N. Ordered by the m tuple, then the n tuple
/// (both lexicographic ascending). Infeasible inputs give an empty list.
std::vector<HeteroPartition> enumerate_partitions(int64_t P, int64_t N,
                                                  const std::vector<TypeCount>& limits,
                                                  int64_t D, int64_t T);

struct HeteroResult {
  std::vector<EvaluatedStrategy> ranked;  // best first
  int64_t partitions = 0;
  int64_t memory_dropped = 0;
};

/// Expands a heterogeneous strategy family (partition unset) over its
/// partitions, drops those that overflow memory, prices the rest and ranks
/// them by throughput, then money.
HeteroResult best_hetero_strategy(const Strategy& family, const GpuCatalog& catalog,
                                  const EfficiencyModel& eff, const MemCoeffs& coeffs,
                                  const TrainConfig& train, const Pricing& pricing = {});

}  // namespace parasearch

#endif  // PARASEARCH_HETERO_H_
