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

#ifndef PARASEARCH_MEMEST_H_
#define PARASEARCH_MEMEST_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "parasearch/catalog.h"
#include "parasearch/strategy.h"

namespace parasearch {

/// Coefficients of the per-layer memory model.
///
/// Activation bytes per layer and microbatch are
///   s*b*h*bytes * (A + Q*a*s/h) / t
/// with Q scaled by the flash/selective factors. Without sequence parallelism
/// only A - activation_tp_unsharded (and the Q term) is divided by t. Fully
/// recomputed layers keep s*b*h*bytes*R instead.
struct MemCoeffs {
  double activation_base = 34;           // A
  double activation_tp_unsharded = 10;   // part of A replicated across TP without SP
  double attention_map = 5;              // Q
  double flash_attn_factor = 0;          // Q multiplier under flash attention
  double selective_recompute_factor = 0; // Q multiplier under selective recompute
  double full_recompute = 2;             // R
  double weight_bytes_per_param = 2;
  double grad_bytes_per_param = 4;
  double optim_bytes_per_param = 12;
  double logits_bytes_per_element = 4;
  double overhead_bytes = 2.0 * 1024 * 1024 * 1024;

  bool operator==(const MemCoeffs&) const = default;
};

/// Missing keys keep their defaults; unknown keys and negative values are rejected.
MemCoeffs parse_mem_coeffs(const nlohmann::json& j);
MemCoeffs load_mem_coeffs(const std::filesystem::path& path);
nlohmann::json mem_coeffs_to_json(const MemCoeffs& c);

/// How one layer keeps its activations for the backward pass.
enum class LayerRecompute { kNone, kSelective, kFull };

double layer_activation_bytes(const ModelArch& arch, const TrainConfig& train,
                              const ParallelParams& params, const MemCoeffs& coeffs,
                              LayerRecompute mode);

/// Per-layer activation for the strategy's own recompute granularity
/// (hybrid counts as full here; see stage_memory for the per-stage mix).
double layer_activation_bytes(const ModelArch& arch, const TrainConfig& train,
                              const ParallelParams& params, const MemCoeffs& coeffs);

struct StageMemory {
  int64_t stage_index = 0;
  double params_bytes = 0;
  double grads_bytes = 0;
  double optim_bytes = 0;
  double activation_bytes = 0;
  double overhead_bytes = 0;
  double total_bytes = 0;
};

/// Throws ValidationError for an out-of-range stage, UnsupportedStrategy for MoE.
StageMemory stage_memory(const Strategy& s, int64_t stage, const MemCoeffs& coeffs,
                         const TrainConfig& train);

struct MemoryVerdict {
  bool fits = true;
  int64_t stage = -1;       // first overflowing stage
  double over_bytes = 0;    // by how much it overflows
  double peak_bytes = 0;    // max over stages
};

MemoryVerdict check_memory(const Strategy& s, const GpuCatalog& catalog,
                           const MemCoeffs& coeffs, const TrainConfig& train);

struct MemoryDrop {
  std::string strategy_id;
  int64_t stage = 0;
  double over_bytes = 0;
};

struct MemoryFilterResult {
  std::vector<Strategy> kept;
  std::vector<MemoryDrop> dropped;
};

MemoryFilterResult filter_by_memory(std::vector<Strategy> strategies,
                                    const GpuCatalog& catalog, const MemCoeffs& coeffs,
                                    const TrainConfig& train);

}  // namespace parasearch

#endif  // PARASEARCH_MEMEST_H_
