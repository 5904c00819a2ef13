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


#ifndef PARASEARCH_PARETO_H_
#define PARASEARCH_PARETO_H_

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "parasearch/catalog.h"
#include "parasearch/costsim.h"
#include "parasearch/strategy.h"

namespace parasearch {

struct BillItem {
  std::string gpu_type;
  int64_t count = 0;
  double fee_per_s = 0;

  bool operator==(const BillItem&) const = default;
};

struct ParetoPoint {
  std::string strategy_id;
  double throughput = 0;  // tokens/s
  double money = 0;
  double time_s = 0;      // horizon the money is charged over
  std::vector<BillItem> gpu_bill;
};

/// Sum of T * count * fee. Negative inputs are rejected.
double money_cost(double seconds, const std::vector<BillItem>& bill);

/// GPUs rented by a strategy, one item per type in pipeline order.
std::vector<BillItem> gpu_bill(const Strategy& s, const GpuCatalog& catalog);

/// Money horizon: one iteration by default, or the time to train on
/// `total_tokens` at the simulated throughput.
struct Pricing {
  std::optional<double> total_tokens;

  double horizon_seconds(const CostBreakdown& cost) const;
};

ParetoPoint make_point(const Strategy& s, const CostBreakdown& cost, const GpuCatalog& catalog,
                       const Pricing& pricing);

enum class Dominance {
  kWeak,    // drop on (P>=, C<) or (P>, C<=); equal points deduplicated
  kStrict,  // drop only on (P>, C<)
};

/// Non-dominated points, ordered by sort_strategies.
std::vector<ParetoPoint> pareto_pool(std::vector<ParetoPoint> points,
                                     Dominance dominance = Dominance::kWeak);

/// Throughput descending, then money ascending, then strategy id ascending.
bool better(const ParetoPoint& a, const ParetoPoint& b);
void sort_strategies(std::vector<ParetoPoint>& points);

/// Highest-throughput frontier point with money <= budget (frontier head when
/// no budget is given).
std::optional<ParetoPoint> select_best_within_budget(const std::vector<ParetoPoint>& frontier,
                                                     std::optional<double> budget);

/// A simulated strategy with its money point.
struct EvaluatedStrategy {
  Strategy strategy;
  CostBreakdown cost;
  ParetoPoint point;
  double peak_memory_bytes = 0;
};

void sort_evaluated(std::vector<EvaluatedStrategy>& items);

nlohmann::json point_to_json(const ParetoPoint& p);

}  // namespace parasearch

#endif  // PARASEARCH_PARETO_H_
