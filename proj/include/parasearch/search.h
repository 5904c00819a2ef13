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


#ifndef PARASEARCH_SEARCH_H_
#define PARASEARCH_SEARCH_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "parasearch/catalog.h"
#include "parasearch/costsim.h"
#include "parasearch/memest.h"
#include "parasearch/modes.h"
#include "parasearch/pareto.h"
#include "parasearch/rulelang.h"
#include "parasearch/strategy.h"

namespace parasearch {

/// Everything a search reads, already loaded.
struct SearchInputs {
  SearchRequest request;
  ModelArch arch;
  TrainConfig train;
  GpuCatalog catalog;
  ParamSpace space = ParamSpace::defaults();
  RuleSet rules = parse_rules(kDefaultRulesText);
  MemCoeffs coeffs;
  EfficiencyModel eff;
};

struct SearchOptions {
  int64_t top_k = 10;
  int workers = 1;  // 0 picks the hardware concurrency
  Dominance dominance = Dominance::kWeak;
  Pricing pricing;
};

/// generated = survivors + sum(rule_dropped) + memory_dropped + infeasible + unsupported.
struct SearchCounts {
  int64_t space_size = 0;          // product of candidate lists, before structural checks
  int64_t structural_skipped = 0;  // ill-formed points never generated
  int64_t generated = 0;
  std::map<std::string, int64_t> rule_dropped;  // every rule listed, zero included
  int64_t memory_dropped = 0;
  int64_t infeasible = 0;   // heterogeneous families without any partition
  int64_t unsupported = 0;  // shapes the simulator does not model (MoE)
  int64_t survivors = 0;
  int64_t simulated = 0;    // cost simulations run (one per partition in mode 2)
  int64_t partitions = 0;   // partitions enumerated in mode 2

  int64_t rule_dropped_total() const;
  bool conserved() const;
};

struct SearchTimings {
  double search_s = 0;      // mode expansion and enumeration
  double simulation_s = 0;  // filters and cost simulation
  double end_to_end_s = 0;
};

struct SearchReport {
  nlohmann::json request;  // echo of the inputs that shape the result
  SearchCounts counts;
  std::vector<EvaluatedStrategy> strategies;  // top-k, best first
  std::vector<ParetoPoint> frontier;
  std::optional<ParetoPoint> selected;
  SearchTimings timings;
};

/// Worker count from PARASEARCH_WORKERS, or 1 when unset or invalid.
int default_workers();

/// Expands the request, enumerates, filters by rules then memory, prices the
/// survivors and builds the money frontier. Results are independent of the
/// worker count.
SearchReport run_search(const SearchInputs& inputs, const SearchOptions& options);

enum class ReportFormat { kJson, kText };
ReportFormat parse_report_format(const std::string& s);

/// Key-sorted JSON with "schema": 1. Wall-clock timings are left out unless
/// asked for so that identical inputs give identical bytes.
nlohmann::json report_to_json(const SearchReport& report, bool include_timings = false);
std::string report_to_text(const SearchReport& report);
/// Writes to `path`, or to stdout when `path` is empty or "-".
void emit_report(const SearchReport& report, const std::filesystem::path& path,
                 ReportFormat format, bool include_timings = false);

}  // namespace parasearch

#endif  // PARASEARCH_SEARCH_H_
