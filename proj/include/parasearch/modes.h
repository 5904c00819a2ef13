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

#ifndef PARASEARCH_MODES_H_
#define PARASEARCH_MODES_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "parasearch/catalog.h"

namespace parasearch {

enum class SearchMode { kHomogeneous, kHeterogeneous, kCost };

enum class Ladder { kPow2, kLinear };

const char* to_string(SearchMode mode);
SearchMode parse_search_mode(const std::string& s);

struct TypeCount {
  std::string gpu_type;
  int64_t count = 0;

  bool operator==(const TypeCount&) const = default;
};

struct SearchRequest {
  SearchMode mode = SearchMode::kHomogeneous;
  std::string gpu_type;              // modes 1 and 3
  int64_t gpu_count = 0;             // modes 1 and 2
  std::vector<TypeCount> type_limits;  // mode 2, per-type maximum
  int64_t max_gpus = 0;              // mode 3
  std::optional<double> max_money;   // mode 3
  Ladder ladder = Ladder::kPow2;
};

/// One runnable GPU collection.
///
/// Homogeneous configs carry one `entries` item. A heterogeneous config is
/// symbolic: `limits` holds the per-type caps and the per-type counts are
/// resolved later by the partitioner, so `entries` stays empty.
struct GpuConfig {
  std::vector<TypeCount> entries;
  std::vector<TypeCount> limits;
  int64_t total = 0;

  bool heterogeneous() const { return !limits.empty(); }
  bool operator==(const GpuConfig&) const = default;
};

/// Expands a request into the GPU configurations to search.
std::vector<GpuConfig> generate_gpu_configs(const SearchRequest& req,
                                            const GpuCatalog& catalog);

/// Mode-3 sizes: {2,4,8,...} (pow2) or {2,4,6,...} (linear) up to max_gpus,
/// plus max_gpus itself; ascending, deduplicated.
std::vector<int64_t> gpu_count_ladder(int64_t max_gpus, Ladder ladder);

}  // namespace parasearch

#endif  // PARASEARCH_MODES_H_
