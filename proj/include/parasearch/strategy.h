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

#ifndef PARASEARCH_STRATEGY_H_
#define PARASEARCH_STRATEGY_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "parasearch/catalog.h"
#include "parasearch/modes.h"

namespace parasearch {

enum class RecomputeGranularity { kNone, kSelective, kFull, kHybrid };
enum class RecomputeMethod { kNone, kBlock, kUniform };

const char* to_string(RecomputeGranularity g);
const char* to_string(RecomputeMethod m);

struct MoeParams {
  int64_t num_experts = 0;
  int64_t ep_size = 0;
  int64_t topk = 0;

  bool operator==(const MoeParams&) const = default;
};

/// One point of the parallel-parameter space (Megatron-style knobs).
struct ParallelParams {
  int64_t pp = 1;
  int64_t tp = 1;
  int64_t dp = 1;
  int64_t micro_batch = 1;
  std::optional<int64_t> vpp_layers;
  bool sequence_parallel = false;
  bool distributed_optimizer = false;
  RecomputeGranularity recompute_granularity = RecomputeGranularity::kNone;
  RecomputeMethod recompute_method = RecomputeMethod::kNone;
  int64_t recompute_num_layers = 1;
  bool offload_optimizer = false;
  bool overlap_p2p = false;
  bool tp_comm_overlap = false;
  bool overlap_grad_reduce = false;
  bool overlap_param_gather = false;
  bool use_flash_attn = false;
  std::optional<MoeParams> moe;

  bool operator==(const ParallelParams&) const = default;
};

/// Contiguous run of pipeline stages on one GPU type.
struct Segment {
  std::string gpu_type;
  int64_t stages = 0;            // m_i
  int64_t layers_per_stage = 0;  // n_i

  bool operator==(const Segment&) const = default;
};

/// Canonical heterogeneous pipeline layout: used types only, in the order of
/// the request's type limits.
struct HeteroPartition {
  std::vector<Segment> segments;

  int64_t num_stages() const;
  int64_t num_layers() const;
  bool operator==(const HeteroPartition&) const = default;
};

struct Strategy {
  GpuConfig gpu_config;
  ParallelParams params;
  ModelArch arch;
  std::optional<HeteroPartition> partition;
  std::string id;

  int64_t num_gpus() const { return gpu_config.total; }
  /// K = global_batch / (dp * micro_batch).
  int64_t num_microbatches(const TrainConfig& train) const;
};

/// Placement of one pipeline stage.
struct StageSlot {
  std::string gpu_type;
  int64_t layers = 0;
  bool first = false;
  bool last = false;
};

/// Per-stage GPU type and layer count. Homogeneous strategies give the
/// ceil(N/pp) layers to the earliest stages; heterogeneous strategies follow
/// their partition.
std::vector<StageSlot> stage_slots(const Strategy& s);

/// Unsharded parameters held by one stage: its layers, the input embedding
/// on the first stage, and the output projection (a separate copy unless tied
/// on a single stage) plus the final norm on the last stage.
double stage_param_count(const ModelArch& arch, const StageSlot& slot, int64_t num_stages);

/// Sets `s.id` to a stable hash of the strategy's contents.
void assign_id(Strategy& s);
Strategy make_strategy(GpuConfig config, ParallelParams params, ModelArch arch,
                       std::optional<HeteroPartition> partition = std::nullopt);

/// Enumerated dimensions in enumeration order (the last varies fastest).
/// Names double as rule-language variable names and param-space keys.
enum class Field {
  kPipelineParallel,
  kTensorParallel,
  kMicroBatch,
  kVppLayers,
  kSequenceParallel,
  kDistributedOptimizer,
  kRecomputeGranularity,
  kRecomputeMethod,
  kRecomputeNumLayers,
  kOffloadOptimizer,
  kOverlapP2p,
  kTpCommOverlap,
  kOverlapGradReduce,
  kOverlapParamGather,
  kUseFlashAttn,
  kNumExperts,
  kExpertParallel,
  kMoeTopk,
};
inline constexpr size_t kNumFields = 18;
const char* field_name(Field f);

/// Candidate values per field. Values are encoded as integers: flags 0/1,
/// enums by ordinal, and kAbsent for an unset optional. `pp`/`tp` left empty
/// mean "derive from the GPU config" (powers of two dividing the GPU count).
class ParamSpace {
 public:
  static constexpr int64_t kAbsent = -1;

  /// Built-in default search space.
  static ParamSpace defaults();

  std::vector<int64_t>& operator[](Field f) { return lists_[static_cast<size_t>(f)]; }
  const std::vector<int64_t>& operator[](Field f) const {
    return lists_[static_cast<size_t>(f)];
  }
  bool is_auto(Field f) const {
    return (f == Field::kPipelineParallel || f == Field::kTensorParallel) &&
           (*this)[f].empty();
  }

 private:
  std::array<std::vector<int64_t>, kNumFields> lists_;
};

/// Parses the param-space file format. Keys absent from `j` keep the default.
ParamSpace parse_param_space(const nlohmann::json& j);
ParamSpace load_param_space(const std::filesystem::path& path);

/// Concrete candidate lists for one GPU config, with auto pp/tp resolved.
std::array<std::vector<int64_t>, kNumFields> resolve_space(
    const ParamSpace& space, const GpuConfig& config, const ModelArch& arch,
    const GpuCatalog& catalog);

int64_t derive_dp(int64_t num_gpus, int64_t pp, int64_t tp);

/// Reason the params are not well-formed for this config, or nullopt.
std::optional<std::string> structural_violation(const ParallelParams& p,
                                                const GpuConfig& config,
                                                const ModelArch& arch,
                                                const TrainConfig& train);

/// Pre-skip size: sum over configs of the product of resolved list lengths.
int64_t search_space_size(const std::vector<GpuConfig>& configs,
                          const ParamSpace& space, const ModelArch& arch,
                          const GpuCatalog& catalog);

/// Deterministic generator over configs x candidate product. Structurally
/// ill-formed points are skipped and counted.
class StrategyEnumerator {
 public:
  StrategyEnumerator(std::vector<GpuConfig> configs, const ParamSpace& space,
                     ModelArch arch, TrainConfig train, const GpuCatalog& catalog);

  /// Writes the next well-formed strategy into `out`; false when exhausted.
  bool next(Strategy& out);
  int64_t skipped() const { return skipped_; }

 private:
  std::vector<GpuConfig> configs_;
  ParamSpace space_;
  ModelArch arch_;
  TrainConfig train_;
  const GpuCatalog& catalog_;
  size_t config_index_ = 0;
  std::array<std::vector<int64_t>, kNumFields> lists_;
  std::array<size_t, kNumFields> cursor_{};
  bool exhausted_config_ = true;
  int64_t skipped_ = 0;
};

std::vector<Strategy> enumerate_strategies(const std::vector<GpuConfig>& configs,
                                           const ParamSpace& space,
                                           const ModelArch& arch,
                                           const TrainConfig& train,
                                           const GpuCatalog& catalog);

nlohmann::json params_to_json(const ParallelParams& p);
nlohmann::json partition_to_json(const HeteroPartition& p);
nlohmann::json gpu_config_to_json(const GpuConfig& c);

}  // namespace parasearch

#endif  // PARASEARCH_STRATEGY_H_
