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


#include "parasearch/pareto.h"

#include <algorithm>
#include <limits>

#include "parasearch/error.h"

namespace parasearch {
namespace {

constexpr const char* kModule = "pareto";

}  // namespace

double money_cost(double seconds, const std::vector<BillItem>& bill) {
  if (seconds < 0) throw ValidationError(kModule, "T", "time must be >= 0");
  double total = 0;
  for (const auto& item : bill) {
    if (item.count < 0 || item.fee_per_s < 0) {
      throw ValidationError(kModule, item.gpu_type, "count and fee must be >= 0");
    }
    total += seconds * static_cast<double>(item.count) * item.fee_per_s;
  }
  return total;
}

std::vector<BillItem> gpu_bill(const Strategy& s, const GpuCatalog& catalog) {
  std::vector<BillItem> bill;
  auto add = [&](const std::string& type, int64_t count) {
    for (auto& item : bill) {
      if (item.gpu_type == type) {
        item.count += count;
        return;
      }
    }
    bill.push_back({type, count, catalog.at(type).price_per_second});
  };
  if (s.partition) {
    const int64_t per_stage = s.params.dp * s.params.tp;
    for (const auto& seg : s.partition->segments) {
      if (seg.stages > 0) add(seg.gpu_type, seg.stages * per_stage);
    }
  } else {
    for (const auto& e : s.gpu_config.entries) add(e.gpu_type, e.count);
  }
  return bill;
}

double Pricing::horizon_seconds(const CostBreakdown& cost) const {
  if (total_tokens) return *total_tokens / cost.throughput_tokens_per_s;
  return cost.t_total;
}

ParetoPoint make_point(const Strategy& s, const CostBreakdown& cost, const GpuCatalog& catalog,
                       const Pricing& pricing) {
  ParetoPoint p;
  p.strategy_id = s.id;
  p.throughput = cost.throughput_tokens_per_s;
  p.time_s = pricing.horizon_seconds(cost);
  p.gpu_bill = gpu_bill(s, catalog);
  p.money = money_cost(p.time_s, p.gpu_bill);
  return p;
}

bool better(const ParetoPoint& a, const ParetoPoint& b) {
  if (a.throughput != b.throughput) return a.throughput > b.throughput;
  if (a.money != b.money) return a.money < b.money;
  return a.strategy_id < b.strategy_id;
}

void sort_strategies(std::vector<ParetoPoint>& points) {
  std::sort(points.begin(), points.end(), better);
}

std::vector<ParetoPoint> pareto_pool(std::vector<ParetoPoint> points, Dominance dominance) {
  sort_strategies(points);
  std::vector<ParetoPoint> out;
  // Lowest money among points with strictly higher throughput.
  double best_higher = std::numeric_limits<double>::infinity();
  size_t i = 0;
  while (i < points.size()) {
    size_t j = i;
    while (j < points.size() && points[j].throughput == points[i].throughput) ++j;
    // Group [i, j) shares one throughput and is sorted by money, then id.
    if (dominance == Dominance::kWeak) {
      if (points[i].money < best_higher) out.push_back(points[i]);
    } else {
      for (size_t k = i; k < j; ++k) {
        if (points[k].money <= best_higher) out.push_back(points[k]);
      }
    }
    best_higher = std::min(best_higher, points[i].money);
    i = j;
  }
  return out;
}

std::optional<ParetoPoint> select_best_within_budget(const std::vector<ParetoPoint>& frontier,
                                                     std::optional<double> budget) {
  std::optional<ParetoPoint> best;
  for (const auto& p : frontier) {
    if (budget && p.money > *budget) continue;
    if (!best || better(p, *best)) best = p;
  }
  return best;
}

void sort_evaluated(std::vector<EvaluatedStrategy>& items) {
  std::sort(items.begin(), items.end(),
            [](const EvaluatedStrategy& a, const EvaluatedStrategy& b) {
              return better(a.point, b.point);
            });
}

nlohmann::json point_to_json(const ParetoPoint& p) {
  nlohmann::json bill = nlohmann::json::array();
  for (const auto& item : p.gpu_bill) {
    bill.push_back({{"gpu_type", item.gpu_type}, {"count", item.count}, {"fee_per_s", item.fee_per_s}});
  }
  return {{"strategy_id", p.strategy_id},
          {"throughput_tokens_per_s", p.throughput},
          {"money", p.money},
          {"time_s", p.time_s},
          {"gpu_bill", bill}};
}

}  // namespace parasearch
