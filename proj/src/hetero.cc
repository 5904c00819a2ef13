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


#include "parasearch/hetero.h"

#include <algorithm>
#include <map>

#include "parasearch/error.h"

namespace parasearch {
namespace {

constexpr const char* kModule = "hetero";

void enumerate_layers(const std::vector<int64_t>& m, size_t type, int64_t remaining,
                      std::vector<int64_t>& n, const std::vector<TypeCount>& limits,
                      std::vector<HeteroPartition>& out) {
  // Skip unused types; find the last used one.
  while (type < m.size() && m[type] == 0) ++type;
  if (type == m.size()) {
    if (remaining != 0) return;
    HeteroPartition p;
    for (size_t i = 0; i < m.size(); ++i) {
      if (m[i] > 0) p.segments.push_back({limits[i].gpu_type, m[i], n[i]});
    }
    out.push_back(std::move(p));
    return;
  }
  size_t next = type + 1;
  while (next < m.size() && m[next] == 0) ++next;
  int64_t later_min = 0;  // each later used type needs at least one layer per stage
  for (size_t i = next; i < m.size(); ++i) later_min += m[i];
  if (next == m.size()) {
    if (remaining % m[type] == 0 && remaining / m[type] >= 1) {
      n[type] = remaining / m[type];
      enumerate_layers(m, next, 0, n, limits, out);
    }
    return;
  }
  for (int64_t v = 1; m[type] * v + later_min <= remaining; ++v) {
    n[type] = v;
    enumerate_layers(m, next, remaining - m[type] * v, n, limits, out);
  }
  n[type] = 0;
}

void enumerate_stages(const std::vector<int64_t>& caps, size_t type, int64_t remaining,
                      std::vector<int64_t>& m, int64_t N, const std::vector<TypeCount>& limits,
                      std::vector<HeteroPartition>& out) {
  if (type + 1 == caps.size()) {
    if (remaining > caps[type]) return;
    m[type] = remaining;
    std::vector<int64_t> n(m.size(), 0);
    enumerate_layers(m, 0, N, n, limits, out);
    return;
  }
  for (int64_t v = 0; v <= std::min(caps[type], remaining); ++v) {
    m[type] = v;
    enumerate_stages(caps, type + 1, remaining - v, m, N, limits, out);
  }
}

}  // namespace

double hetero_pipeline_time(const StageTimes& stages, int64_t K) {
  if (K < 1) throw ValidationError(kModule, "K", "microbatch count must be >= 1");
  double sum = 0;
  double slowest = 0;
  for (const auto& s : stages) {
    sum += s.t + s.h;
    slowest = std::max(slowest, s.t + s.h);
  }
  return sum + static_cast<double>(K - 1) * slowest;
}

double simulate_pipeline_schedule(const StageTimes& stages, int64_t K) {
  if (K < 1) throw ValidationError(kModule, "K", "microbatch count must be >= 1");
  // finish[i] holds F(i, j) for the microbatch j processed last.
  std::vector<double> finish(stages.size(), 0.0);
  for (int64_t j = 0; j < K; ++j) {
    double upstream = 0;  // F(i-1, j)
    for (size_t i = 0; i < stages.size(); ++i) {
      finish[i] = std::max(upstream, finish[i]) + stages[i].t + stages[i].h;
      upstream = finish[i];
    }
  }
  return finish.empty() ? 0.0 : finish.back();
}

std::vector<TypeCount> canonicalize_partition(const std::vector<std::string>& labeling,
                                              const std::vector<std::string>& type_order) {
  std::map<std::string, int64_t> counts;
  for (const auto& label : labeling) ++counts[label];
  std::vector<TypeCount> out;
  for (const auto& type : type_order) {
    auto it = counts.find(type);
    if (it != counts.end()) {
      out.push_back({type, it->second});
      counts.erase(it);
    }
  }
  for (const auto& [type, count] : counts) out.push_back({type, count});
  return out;
}

std::vector<HeteroPartition> enumerate_partitions(int64_t P, int64_t N,
                                                  const std::vector<TypeCount>& limits,
                                                  int64_t D, int64_t T) {
  if (P < 1) throw ValidationError(kModule, "P", "stage count must be >= 1");
  if (D < 1 || T < 1) throw ValidationError(kModule, "D*T", "dp and tp must be >= 1");
  std::vector<HeteroPartition> out;
  if (limits.empty() || N < P) return out;
  std::vector<int64_t> caps;
  for (const auto& l : limits) caps.push_back(std::max<int64_t>(0, l.count / (D * T)));
  std::vector<int64_t> m(limits.size(), 0);
  enumerate_stages(caps, 0, P, m, N, limits, out);
  return out;
}

HeteroResult best_hetero_strategy(const Strategy& family, const GpuCatalog& catalog,
                                  const EfficiencyModel& eff, const MemCoeffs& coeffs,
                                  const TrainConfig& train, const Pricing& pricing) {
  if (!family.gpu_config.heterogeneous()) {
    throw ValidationError(kModule, "gpu_config", "strategy " + family.id + " is not heterogeneous");
  }
  const ParallelParams& p = family.params;
  HeteroResult result;
  const auto partitions =
      enumerate_partitions(p.pp, family.arch.num_layers, family.gpu_config.limits, p.dp, p.tp);
  result.partitions = static_cast<int64_t>(partitions.size());
  for (const auto& partition : partitions) {
    Strategy s = make_strategy(family.gpu_config, p, family.arch, partition);
    const MemoryVerdict verdict = check_memory(s, catalog, coeffs, train);
    if (!verdict.fits) {
      ++result.memory_dropped;
      continue;
    }
    EvaluatedStrategy e;
    e.cost = simulate_strategy(s, catalog, eff, train);
    e.point = make_point(s, e.cost, catalog, pricing);
    e.peak_memory_bytes = verdict.peak_bytes;
    e.strategy = std::move(s);
    result.ranked.push_back(std::move(e));
  }
  sort_evaluated(result.ranked);
  return result;
}

}  // namespace parasearch
