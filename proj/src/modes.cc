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

#include "parasearch/modes.h"

#include <set>

#include "parasearch/error.h"

namespace parasearch {
namespace {
constexpr const char* kModule = "modes";
}  // namespace

const char* to_string(SearchMode mode) {
  switch (mode) {
    case SearchMode::kHomogeneous: return "homogeneous";
    case SearchMode::kHeterogeneous: return "heterogeneous";
    case SearchMode::kCost: return "cost";
  }
  return "?";
}

SearchMode parse_search_mode(const std::string& s) {
  if (s == "homogeneous" || s == "1") return SearchMode::kHomogeneous;
  if (s == "heterogeneous" || s == "2") return SearchMode::kHeterogeneous;
  if (s == "cost" || s == "3") return SearchMode::kCost;
  throw ValidationError(kModule, "mode", "unknown search mode '" + s + "'");
}

std::vector<int64_t> gpu_count_ladder(int64_t max_gpus, Ladder ladder) {
  std::set<int64_t> counts;
  if (ladder == Ladder::kPow2) {
    for (int64_t n = 2; n <= max_gpus; n *= 2) counts.insert(n);
  } else {
    for (int64_t n = 2; n <= max_gpus; n += 2) counts.insert(n);
  }
  counts.insert(max_gpus);
  return {counts.begin(), counts.end()};
}

std::vector<GpuConfig> generate_gpu_configs(const SearchRequest& req,
                                            const GpuCatalog& catalog) {
  switch (req.mode) {
    case SearchMode::kHomogeneous: {
      catalog.at(req.gpu_type);
      if (req.gpu_count < 1) {
        throw ValidationError(kModule, "gpu_count", "must be >= 1");
      }
      GpuConfig c;
      c.entries.push_back({req.gpu_type, req.gpu_count});
      c.total = req.gpu_count;
      return {c};
    }
    case SearchMode::kHeterogeneous: {
      if (req.gpu_count < 1) {
        throw ValidationError(kModule, "gpu_count", "must be >= 1");
      }
      if (req.type_limits.empty()) {
        throw ValidationError(kModule, "type_limits",
                              "heterogeneous mode needs at least one type limit");
      }
      std::set<std::string> seen;
      for (const auto& l : req.type_limits) {
        catalog.at(l.gpu_type);
        if (l.count < 1) {
          throw ValidationError(kModule, "type_limits",
                                "limit for '" + l.gpu_type + "' must be >= 1");
        }
        if (!seen.insert(l.gpu_type).second) {
          throw ValidationError(kModule, "type_limits",
                                "duplicate limit for '" + l.gpu_type + "'");
        }
      }
      GpuConfig c;
      c.limits = req.type_limits;
      c.total = req.gpu_count;
      return {c};
    }
    case SearchMode::kCost: {
      catalog.at(req.gpu_type);
      if (req.max_gpus < 1) {
        throw ValidationError(kModule, "max_gpus", "must be >= 1");
      }
      std::vector<GpuConfig> out;
      for (int64_t n : gpu_count_ladder(req.max_gpus, req.ladder)) {
        GpuConfig c;
        c.entries.push_back({req.gpu_type, n});
        c.total = n;
        out.push_back(std::move(c));
      }
      return out;
    }
  }
  return {};
}

}  // namespace parasearch
