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

#include "parasearch/strategy.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "parasearch/error.h"

namespace parasearch {
namespace {

constexpr const char* kModule = "strategy";
using nlohmann::json;

enum class Kind { kInt, kOptInt, kBool, kGranularity, kMethod };

struct FieldInfo {
  Field field;
  const char* name;
  Kind kind;
};

// Order must match the Field enum.
constexpr std::array<FieldInfo, kNumFields> kFields = {{
    {Field::kPipelineParallel, "pipeline_model_parallel_size", Kind::kInt},
    {Field::kTensorParallel, "tensor_model_parallel_size", Kind::kInt},
    {Field::kMicroBatch, "micro_batch_size", Kind::kInt},
    {Field::kVppLayers, "num_layers_per_virtual_pipeline_stage", Kind::kOptInt},
    {Field::kSequenceParallel, "sequence_parallel", Kind::kBool},
    {Field::kDistributedOptimizer, "use_distributed_optimizer", Kind::kBool},
    {Field::kRecomputeGranularity, "recompute_granularity", Kind::kGranularity},
    {Field::kRecomputeMethod, "recompute_method", Kind::kMethod},
    {Field::kRecomputeNumLayers, "recompute_num_layers", Kind::kInt},
    {Field::kOffloadOptimizer, "offload_optimizer", Kind::kBool},
    {Field::kOverlapP2p, "overlap_p2p_communication", Kind::kBool},
    {Field::kTpCommOverlap, "tp_comm_overlap", Kind::kBool},
    {Field::kOverlapGradReduce, "overlap_grad_reduce", Kind::kBool},
    {Field::kOverlapParamGather, "overlap_param_gather", Kind::kBool},
    {Field::kUseFlashAttn, "use_flash_attn", Kind::kBool},
    {Field::kNumExperts, "num_experts", Kind::kOptInt},
    {Field::kExpertParallel, "expert_model_parallel_size", Kind::kOptInt},
    {Field::kMoeTopk, "moe_router_topk", Kind::kOptInt},
}};

size_t idx(Field f) { return static_cast<size_t>(f); }

int64_t parse_granularity(const std::string& s, const std::string& key) {
  if (s == "none") return static_cast<int64_t>(RecomputeGranularity::kNone);
  if (s == "selective") return static_cast<int64_t>(RecomputeGranularity::kSelective);
  if (s == "full") return static_cast<int64_t>(RecomputeGranularity::kFull);
  if (s == "hybrid") return static_cast<int64_t>(RecomputeGranularity::kHybrid);
  throw ValidationError(kModule, key, "unknown recompute granularity '" + s + "'");
}

int64_t parse_method(const std::string& s, const std::string& key) {
  if (s == "none") return static_cast<int64_t>(RecomputeMethod::kNone);
  if (s == "block") return static_cast<int64_t>(RecomputeMethod::kBlock);
  if (s == "uniform") return static_cast<int64_t>(RecomputeMethod::kUniform);
  throw ValidationError(kModule, key, "unknown recompute method '" + s + "'");
}

int64_t parse_value(const json& v, Kind kind, const std::string& key) {
  switch (kind) {
    case Kind::kInt:
    case Kind::kOptInt:
      if (v.is_null() && kind == Kind::kOptInt) return ParamSpace::kAbsent;
      if (!v.is_number_integer() || v.get<int64_t>() < 1) {
        throw ValidationError(kModule, key, "expected positive integers");
      }
      return v.get<int64_t>();
    case Kind::kBool:
      if (!v.is_boolean()) throw ValidationError(kModule, key, "expected booleans");
      return v.get<bool>() ? 1 : 0;
    case Kind::kGranularity:
      if (!v.is_string()) throw ValidationError(kModule, key, "expected strings");
      return parse_granularity(v.get<std::string>(), key);
    case Kind::kMethod:
      if (!v.is_string()) throw ValidationError(kModule, key, "expected strings");
      return parse_method(v.get<std::string>(), key);
  }
  return 0;
}

std::vector<int64_t> parse_range(const json& r, Kind kind, const std::string& key) {
  if (kind != Kind::kInt && kind != Kind::kOptInt) {
    throw ValidationError(kModule, key, "range objects need an integer parameter");
  }
  if (!r.contains("min") || !r.contains("max")) {
    throw ValidationError(kModule, key, "range needs \"min\" and \"max\"");
  }
  const int64_t lo = parse_value(r["min"], Kind::kInt, key);
  const int64_t hi = parse_value(r["max"], Kind::kInt, key);
  const std::string scale = r.value("scale", std::string("linear"));
  if (lo > hi) throw ValidationError(kModule, key, "min > max");
  std::vector<int64_t> out;
  if (scale == "pow2") {
    for (int64_t v = 1; v <= hi; v *= 2) {
      if (v >= lo) out.push_back(v);
    }
  } else if (scale == "linear") {
    for (int64_t v = lo; v <= hi; ++v) out.push_back(v);
  } else {
    throw ValidationError(kModule, key, "scale must be \"pow2\" or \"linear\"");
  }
  if (out.empty()) throw ValidationError(kModule, key, "range is empty");
  return out;
}

std::vector<int64_t> pow2_divisors(int64_t n, int64_t cap) {
  std::vector<int64_t> out;
  for (int64_t v = 1; v <= cap && v <= n; v *= 2) {
    if (n % v == 0) out.push_back(v);
  }
  return out;
}

ParallelParams decode(const std::array<std::vector<int64_t>, kNumFields>& lists,
                      const std::array<size_t, kNumFields>& cursor,
                      int64_t num_gpus) {
  auto get = [&](Field f) { return lists[idx(f)][cursor[idx(f)]]; };
  auto opt = [&](Field f) -> std::optional<int64_t> {
    const int64_t v = get(f);
    if (v == ParamSpace::kAbsent) return std::nullopt;
    return v;
  };
  ParallelParams p;
  p.pp = get(Field::kPipelineParallel);
  p.tp = get(Field::kTensorParallel);
  p.dp = (num_gpus % (p.pp * p.tp) == 0) ? num_gpus / (p.pp * p.tp) : 0;
  p.micro_batch = get(Field::kMicroBatch);
  p.vpp_layers = opt(Field::kVppLayers);
  p.sequence_parallel = get(Field::kSequenceParallel) != 0;
  p.distributed_optimizer = get(Field::kDistributedOptimizer) != 0;
  p.recompute_granularity =
      static_cast<RecomputeGranularity>(get(Field::kRecomputeGranularity));
  p.recompute_method = static_cast<RecomputeMethod>(get(Field::kRecomputeMethod));
  p.recompute_num_layers = get(Field::kRecomputeNumLayers);
  p.offload_optimizer = get(Field::kOffloadOptimizer) != 0;
  p.overlap_p2p = get(Field::kOverlapP2p) != 0;
  p.tp_comm_overlap = get(Field::kTpCommOverlap) != 0;
  p.overlap_grad_reduce = get(Field::kOverlapGradReduce) != 0;
  p.overlap_param_gather = get(Field::kOverlapParamGather) != 0;
  p.use_flash_attn = get(Field::kUseFlashAttn) != 0;
  const auto experts = opt(Field::kNumExperts);
  const auto ep = opt(Field::kExpertParallel);
  const auto topk = opt(Field::kMoeTopk);
  if (experts || ep || topk) {
    // Partially specified MoE is rejected structurally; zeros mark the gap.
    p.moe = MoeParams{experts.value_or(0), ep.value_or(0), topk.value_or(0)};
  }
  return p;
}

int64_t gpus_per_node_for(const GpuConfig& config, const GpuCatalog& catalog) {
  int64_t gpn = 0;
  auto take = [&](const std::string& type) {
    const int64_t g = catalog.at(type).gpus_per_node;
    gpn = gpn == 0 ? g : std::min(gpn, g);
  };
  for (const auto& e : config.entries) take(e.gpu_type);
  for (const auto& l : config.limits) take(l.gpu_type);
  return std::max<int64_t>(gpn, 1);
}

}  // namespace

const char* to_string(RecomputeGranularity g) {
  switch (g) {
    case RecomputeGranularity::kNone: return "none";
    case RecomputeGranularity::kSelective: return "selective";
    case RecomputeGranularity::kFull: return "full";
    case RecomputeGranularity::kHybrid: return "hybrid";
  }
  return "?";
}

const char* to_string(RecomputeMethod m) {
  switch (m) {
    case RecomputeMethod::kNone: return "none";
    case RecomputeMethod::kBlock: return "block";
    case RecomputeMethod::kUniform: return "uniform";
  }
  return "?";
}

const char* field_name(Field f) { return kFields[idx(f)].name; }

int64_t HeteroPartition::num_stages() const {
  int64_t n = 0;
  for (const auto& s : segments) n += s.stages;
  return n;
}

int64_t HeteroPartition::num_layers() const {
  int64_t n = 0;
  for (const auto& s : segments) n += s.stages * s.layers_per_stage;
  return n;
}

std::vector<StageSlot> stage_slots(const Strategy& s) {
  std::vector<StageSlot> out;
  if (s.partition) {
    for (const auto& seg : s.partition->segments) {
      for (int64_t i = 0; i < seg.stages; ++i) {
        out.push_back({seg.gpu_type, seg.layers_per_stage, false, false});
      }
    }
  } else {
    const std::string type =
        s.gpu_config.entries.empty() ? std::string() : s.gpu_config.entries.front().gpu_type;
    const int64_t pp = s.params.pp;
    const int64_t base = s.arch.num_layers / pp;
    const int64_t extra = s.arch.num_layers % pp;
    for (int64_t i = 0; i < pp; ++i) {
      out.push_back({type, base + (i < extra ? 1 : 0), false, false});
    }
  }
  if (!out.empty()) {
    out.front().first = true;
    out.back().last = true;
  }
  return out;
}

double stage_param_count(const ModelArch& arch, const StageSlot& slot, int64_t num_stages) {
  double params = static_cast<double>(slot.layers) * static_cast<double>(layer_param_count(arch));
  const double table = static_cast<double>(arch.vocab_size * arch.hidden_size);
  if (slot.first) params += table;
  if (slot.last) {
    if (!arch.tied_embeddings || num_stages > 1) params += table;
    if (arch.final_norm) params += static_cast<double>(arch.hidden_size);
  }
  return params;
}

int64_t Strategy::num_microbatches(const TrainConfig& train) const {
  const int64_t per_step = params.dp * params.micro_batch;
  return per_step > 0 ? train.global_batch / per_step : 0;
}

void assign_id(Strategy& s) {
  std::ostringstream os;
  for (const auto& e : s.gpu_config.entries) os << e.gpu_type << ':' << e.count << ',';
  os << '/';
  for (const auto& l : s.gpu_config.limits) os << l.gpu_type << ':' << l.count << ',';
  os << '/' << s.gpu_config.total << '|';
  const auto& p = s.params;
  os << p.pp << ',' << p.tp << ',' << p.dp << ',' << p.micro_batch << ','
     << p.vpp_layers.value_or(-1) << ',' << p.sequence_parallel << ','
     << p.distributed_optimizer << ',' << static_cast<int>(p.recompute_granularity)
     << ',' << static_cast<int>(p.recompute_method) << ',' << p.recompute_num_layers
     << ',' << p.offload_optimizer << ',' << p.overlap_p2p << ',' << p.tp_comm_overlap
     << ',' << p.overlap_grad_reduce << ',' << p.overlap_param_gather << ','
     << p.use_flash_attn << ',';
  if (p.moe) os << p.moe->num_experts << ':' << p.moe->ep_size << ':' << p.moe->topk;
  os << '|' << s.arch.family << ',' << s.arch.num_layers << ',' << s.arch.hidden_size
     << ',' << s.arch.num_heads << ',' << s.arch.intermediate_size << ','
     << s.arch.vocab_size << '|';
  if (s.partition) {
    for (const auto& seg : s.partition->segments) {
      os << seg.gpu_type << ':' << seg.stages << ':' << seg.layers_per_stage << ',';
    }
  }
  // FNV-1a, 64 bit.
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  s.id = buf;
}

Strategy make_strategy(GpuConfig config, ParallelParams params, ModelArch arch,
                       std::optional<HeteroPartition> partition) {
  Strategy s{std::move(config), std::move(params), std::move(arch),
             std::move(partition), {}};
  assign_id(s);
  return s;
}

ParamSpace ParamSpace::defaults() {
  ParamSpace s;
  s[Field::kMicroBatch] = {1, 2, 4, 8};
  s[Field::kVppLayers] = {kAbsent};
  s[Field::kSequenceParallel] = {0, 1};
  s[Field::kDistributedOptimizer] = {0, 1};
  s[Field::kRecomputeGranularity] = {
      static_cast<int64_t>(RecomputeGranularity::kNone),
      static_cast<int64_t>(RecomputeGranularity::kSelective),
      static_cast<int64_t>(RecomputeGranularity::kFull)};
  s[Field::kRecomputeMethod] = {static_cast<int64_t>(RecomputeMethod::kUniform),
                                static_cast<int64_t>(RecomputeMethod::kBlock)};
  s[Field::kRecomputeNumLayers] = {1, 2, 4, 8};
  s[Field::kOffloadOptimizer] = {0, 1};
  s[Field::kOverlapP2p] = {1};
  s[Field::kTpCommOverlap] = {1};
  s[Field::kOverlapGradReduce] = {1};
  s[Field::kOverlapParamGather] = {1};
  s[Field::kUseFlashAttn] = {1};
  s[Field::kNumExperts] = {kAbsent};
  s[Field::kExpertParallel] = {kAbsent};
  s[Field::kMoeTopk] = {kAbsent};
  return s;
}

ParamSpace parse_param_space(const json& j) {
  if (!j.is_object()) throw ValidationError(kModule, "space", "expected a JSON object");
  ParamSpace space = ParamSpace::defaults();
  for (const auto& [key, value] : j.items()) {
    auto it = std::find_if(kFields.begin(), kFields.end(),
                           [&](const FieldInfo& f) { return key == f.name; });
    if (it == kFields.end()) {
      throw ValidationError(kModule, key, "unknown parameter");
    }
    std::vector<int64_t>& list = space[it->field];
    if (value.is_string() && value.get<std::string>() == "auto" &&
        (it->field == Field::kPipelineParallel || it->field == Field::kTensorParallel)) {
      list.clear();
    } else if (value.is_array()) {
      if (value.empty()) throw ValidationError(kModule, key, "candidate list is empty");
      list.clear();
      for (const auto& v : value) list.push_back(parse_value(v, it->kind, key));
    } else if (value.is_object()) {
      list = parse_range(value, it->kind, key);
    } else {
      throw ValidationError(kModule, key, "expected a list or a range object");
    }
  }
  return space;
}

ParamSpace load_param_space(const std::filesystem::path& path) {
  return parse_param_space(read_json_file(path, kModule));
}

std::array<std::vector<int64_t>, kNumFields> resolve_space(const ParamSpace& space,
                                                          const GpuConfig& config,
                                                          const ModelArch& arch,
                                                          const GpuCatalog& catalog) {
  std::array<std::vector<int64_t>, kNumFields> lists;
  for (size_t i = 0; i < kNumFields; ++i) lists[i] = space[static_cast<Field>(i)];
  const int64_t n = config.total;
  if (space.is_auto(Field::kPipelineParallel)) {
    lists[idx(Field::kPipelineParallel)] = pow2_divisors(n, arch.num_layers);
  }
  if (space.is_auto(Field::kTensorParallel)) {
    const int64_t cap = std::min<int64_t>(arch.num_heads, gpus_per_node_for(config, catalog));
    lists[idx(Field::kTensorParallel)] = pow2_divisors(n, cap);
  }
  return lists;
}

int64_t derive_dp(int64_t num_gpus, int64_t pp, int64_t tp) {
  if (pp < 1 || tp < 1 || num_gpus % (pp * tp) != 0) {
    throw ValidationError(kModule, "data_model_parallel_size",
                          std::to_string(num_gpus) + " GPUs are not divisible by pp*tp = " +
                              std::to_string(pp * tp));
  }
  return num_gpus / (pp * tp);
}

std::optional<std::string> structural_violation(const ParallelParams& p,
                                                const GpuConfig& config,
                                                const ModelArch& arch,
                                                const TrainConfig& train) {
  if (p.pp < 1 || p.tp < 1 || p.micro_batch < 1) return "non-positive degree";
  if (config.total % (p.pp * p.tp) != 0) return "pp*tp does not divide num_gpus";
  if (p.dp * p.pp * p.tp != config.total) return "pp*tp*dp != num_gpus";
  if (train.global_batch % (p.dp * p.micro_batch) != 0) {
    return "dp*micro_batch does not divide global_batch";
  }
  if (p.pp > arch.num_layers) return "pp exceeds num_layers";
  if (arch.num_heads % p.tp != 0 || arch.hidden_size % p.tp != 0) {
    return "tp does not divide num_heads and hidden_size";
  }
  if (p.vpp_layers) {
    if (config.heterogeneous()) return "virtual pipeline not supported on heterogeneous configs";
    if (p.pp < 2) return "virtual pipeline needs pp > 1";
    if (arch.num_layers % p.pp != 0) return "virtual pipeline needs pp | num_layers";
    const int64_t per_stage = arch.num_layers / p.pp;
    if (*p.vpp_layers >= per_stage || per_stage % *p.vpp_layers != 0) {
      return "vpp layers must properly divide layers per stage";
    }
  }
  if (p.moe) {
    const auto& m = *p.moe;
    if (m.num_experts < 1 || m.ep_size < 1 || m.topk < 1) return "partial MoE parameters";
    if (m.num_experts % m.ep_size != 0) return "ep does not divide num_experts";
    if (p.dp % m.ep_size != 0) return "ep does not divide dp";
    if (m.topk > m.num_experts) return "topk exceeds num_experts";
  }
  return std::nullopt;
}

int64_t search_space_size(const std::vector<GpuConfig>& configs, const ParamSpace& space,
                          const ModelArch& arch, const GpuCatalog& catalog) {
  int64_t total = 0;
  for (const auto& c : configs) {
    int64_t prod = 1;
    for (const auto& list : resolve_space(space, c, arch, catalog)) {
      prod *= static_cast<int64_t>(list.size());
    }
    total += prod;
  }
  return total;
}

StrategyEnumerator::StrategyEnumerator(std::vector<GpuConfig> configs,
                                       const ParamSpace& space, ModelArch arch,
                                       TrainConfig train, const GpuCatalog& catalog)
    : configs_(std::move(configs)),
      space_(space),
      arch_(std::move(arch)),
      train_(train),
      catalog_(catalog) {}

bool StrategyEnumerator::next(Strategy& out) {
  while (true) {
    if (exhausted_config_) {
      if (config_index_ >= configs_.size()) return false;
      lists_ = resolve_space(space_, configs_[config_index_], arch_, catalog_);
      cursor_.fill(0);
      exhausted_config_ = std::any_of(lists_.begin(), lists_.end(),
                                      [](const auto& l) { return l.empty(); });
      if (exhausted_config_) {
        ++config_index_;
        continue;
      }
    }
    const GpuConfig& config = configs_[config_index_];
    ParallelParams p = decode(lists_, cursor_, config.total);
    const bool bad = structural_violation(p, config, arch_, train_).has_value();
    if (!bad) out = make_strategy(config, p, arch_);

    // Odometer step; the last field varies fastest.
    size_t i = kNumFields;
    while (i > 0) {
      --i;
      if (++cursor_[i] < lists_[i].size()) break;
      cursor_[i] = 0;
      if (i == 0) {
        exhausted_config_ = true;
        ++config_index_;
      }
    }
    if (bad) {
      ++skipped_;
      continue;
    }
    return true;
  }
}

std::vector<Strategy> enumerate_strategies(const std::vector<GpuConfig>& configs,
                                           const ParamSpace& space, const ModelArch& arch,
                                           const TrainConfig& train,
                                           const GpuCatalog& catalog) {
  StrategyEnumerator gen(configs, space, arch, train, catalog);
  std::vector<Strategy> out;
  Strategy s;
  while (gen.next(s)) out.push_back(s);
  return out;
}

json params_to_json(const ParallelParams& p) {
  json j = {
      {field_name(Field::kPipelineParallel), p.pp},
      {field_name(Field::kTensorParallel), p.tp},
      {"data_model_parallel_size", p.dp},
      {field_name(Field::kMicroBatch), p.micro_batch},
      {field_name(Field::kVppLayers), p.vpp_layers ? json(*p.vpp_layers) : json(nullptr)},
      {field_name(Field::kSequenceParallel), p.sequence_parallel},
      {field_name(Field::kDistributedOptimizer), p.distributed_optimizer},
      {field_name(Field::kRecomputeGranularity), to_string(p.recompute_granularity)},
      {field_name(Field::kRecomputeMethod), to_string(p.recompute_method)},
      {field_name(Field::kRecomputeNumLayers), p.recompute_num_layers},
      {field_name(Field::kOffloadOptimizer), p.offload_optimizer},
      {field_name(Field::kOverlapP2p), p.overlap_p2p},
      {field_name(Field::kTpCommOverlap), p.tp_comm_overlap},
      {field_name(Field::kOverlapGradReduce), p.overlap_grad_reduce},
      {field_name(Field::kOverlapParamGather), p.overlap_param_gather},
      {field_name(Field::kUseFlashAttn), p.use_flash_attn},
  };
  j[field_name(Field::kNumExperts)] = p.moe ? json(p.moe->num_experts) : json(nullptr);
  j[field_name(Field::kExpertParallel)] = p.moe ? json(p.moe->ep_size) : json(nullptr);
  j[field_name(Field::kMoeTopk)] = p.moe ? json(p.moe->topk) : json(nullptr);
  return j;
}

json partition_to_json(const HeteroPartition& p) {
  json segs = json::array();
  for (const auto& s : p.segments) {
    segs.push_back({{"gpu_type", s.gpu_type},
                    {"stages", s.stages},
                    {"layers_per_stage", s.layers_per_stage}});
  }
  return segs;
}

json gpu_config_to_json(const GpuConfig& c) {
  auto list = [](const std::vector<TypeCount>& v) {
    json a = json::array();
    for (const auto& e : v) a.push_back({{"gpu_type", e.gpu_type}, {"count", e.count}});
    return a;
  };
  return json{{"entries", list(c.entries)}, {"limits", list(c.limits)}, {"total", c.total}};
}

}  // namespace parasearch
