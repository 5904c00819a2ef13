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

#include "parasearch/memest.h"

#include <algorithm>
#include <utility>

#include "parasearch/error.h"

namespace parasearch {
namespace {

constexpr const char* kModule = "memest";
using nlohmann::json;

struct CoeffField {
  const char* name;
  double MemCoeffs::*member;
};

constexpr CoeffField kCoeffFields[] = {
    {"activation_base", &MemCoeffs::activation_base},
    {"activation_tp_unsharded", &MemCoeffs::activation_tp_unsharded},
    {"attention_map", &MemCoeffs::attention_map},
    {"flash_attn_factor", &MemCoeffs::flash_attn_factor},
    {"selective_recompute_factor", &MemCoeffs::selective_recompute_factor},
    {"full_recompute", &MemCoeffs::full_recompute},
    {"weight_bytes_per_param", &MemCoeffs::weight_bytes_per_param},
    {"grad_bytes_per_param", &MemCoeffs::grad_bytes_per_param},
    {"optim_bytes_per_param", &MemCoeffs::optim_bytes_per_param},
    {"logits_bytes_per_element", &MemCoeffs::logits_bytes_per_element},
    {"overhead_bytes", &MemCoeffs::overhead_bytes},
};

}  // namespace

MemCoeffs parse_mem_coeffs(const json& j) {
  if (!j.is_object()) throw ValidationError(kModule, "coeffs", "expected a JSON object");
  MemCoeffs c;
  for (const auto& [key, value] : j.items()) {
    const CoeffField* field = nullptr;
    for (const auto& f : kCoeffFields) {
      if (key == f.name) field = &f;
    }
    if (!field) throw ValidationError(kModule, key, "unknown coefficient");
    if (!value.is_number() || value.get<double>() < 0) {
      throw ValidationError(kModule, key, "must be a non-negative number");
    }
    c.*(field->member) = value.get<double>();
  }
  if (c.activation_tp_unsharded > c.activation_base) {
    throw ValidationError(kModule, "activation_tp_unsharded", "exceeds activation_base");
  }
  return c;
}

MemCoeffs load_mem_coeffs(const std::filesystem::path& path) {
  return parse_mem_coeffs(read_json_file(path, kModule));
}

json mem_coeffs_to_json(const MemCoeffs& c) {
  json j = json::object();
  for (const auto& f : kCoeffFields) j[f.name] = c.*(f.member);
  return j;
}

double layer_activation_bytes(const ModelArch& arch, const TrainConfig& train,
                              const ParallelParams& p, const MemCoeffs& c,
                              LayerRecompute mode) {
  const double s = static_cast<double>(train.seq_len);
  const double b = static_cast<double>(p.micro_batch);
  const double h = static_cast<double>(arch.hidden_size);
  const double a = static_cast<double>(arch.num_heads);
  const double t = static_cast<double>(p.tp);
  const double unit = s * b * h * static_cast<double>(train.bytes_per_element);

  if (mode == LayerRecompute::kFull) {
    return unit * c.full_recompute / (p.sequence_parallel ? t : 1.0);
  }
  double q = c.attention_map;
  if (p.use_flash_attn) q *= c.flash_attn_factor;
  if (mode == LayerRecompute::kSelective) q *= c.selective_recompute_factor;
  const double attn = q * a * s / h;
  if (p.sequence_parallel) return unit * (c.activation_base + attn) / t;
  return unit * (c.activation_tp_unsharded +
                 (c.activation_base - c.activation_tp_unsharded) / t + attn / t);
}

double layer_activation_bytes(const ModelArch& arch, const TrainConfig& train,
                              const ParallelParams& p, const MemCoeffs& c) {
  switch (p.recompute_granularity) {
    case RecomputeGranularity::kNone:
      return layer_activation_bytes(arch, train, p, c, LayerRecompute::kNone);
    case RecomputeGranularity::kSelective:
      return layer_activation_bytes(arch, train, p, c, LayerRecompute::kSelective);
    case RecomputeGranularity::kFull:
    case RecomputeGranularity::kHybrid:
      return layer_activation_bytes(arch, train, p, c, LayerRecompute::kFull);
  }
  return 0;
}

namespace {

StageMemory stage_memory_in(const Strategy& s, const std::vector<StageSlot>& slots,
                            int64_t stage, const MemCoeffs& c, const TrainConfig& train) {
  const StageSlot& slot = slots[static_cast<size_t>(stage)];
  const ParallelParams& p = s.params;
  const ModelArch& arch = s.arch;
  const int64_t pp = static_cast<int64_t>(slots.size());
  const double t = static_cast<double>(p.tp);

  double params = stage_param_count(arch, slot, pp);
  params /= t;

  StageMemory m;
  m.stage_index = stage;
  m.params_bytes = params * c.weight_bytes_per_param;
  m.grads_bytes = params * c.grad_bytes_per_param;
  if (!p.offload_optimizer) {
    m.optim_bytes = params * c.optim_bytes_per_param;
    if (p.distributed_optimizer) m.optim_bytes /= static_cast<double>(p.dp);
  }

  const double stored = layer_activation_bytes(arch, train, p, c, LayerRecompute::kNone);
  const double selective = layer_activation_bytes(arch, train, p, c, LayerRecompute::kSelective);
  const double full = layer_activation_bytes(arch, train, p, c, LayerRecompute::kFull);
  const double layers = static_cast<double>(slot.layers);
  const double block = static_cast<double>(std::min(p.recompute_num_layers, slot.layers));
  double per_microbatch = 0;
  switch (p.recompute_granularity) {
    case RecomputeGranularity::kNone: per_microbatch = layers * stored; break;
    case RecomputeGranularity::kSelective: per_microbatch = layers * selective; break;
    case RecomputeGranularity::kFull:
      per_microbatch = p.recompute_method == RecomputeMethod::kBlock
                           ? block * full + (layers - block) * stored
                           : layers * full;
      break;
    case RecomputeGranularity::kHybrid:
      per_microbatch = block * full + (layers - block) * selective;
      break;
  }
  const double seq_tokens = static_cast<double>(train.seq_len * p.micro_batch);
  if (slot.first) {
    per_microbatch += seq_tokens * static_cast<double>(arch.hidden_size * train.bytes_per_element) /
                      (p.sequence_parallel ? t : 1.0);
  }
  // 1F1B keeps at most (pp - stage) microbatches in flight.
  const int64_t in_flight = std::min(pp - stage, s.num_microbatches(train));
  m.activation_bytes = per_microbatch * static_cast<double>(std::max<int64_t>(in_flight, 1));
  if (slot.last) {
    m.activation_bytes +=
        seq_tokens * static_cast<double>(arch.vocab_size) * c.logits_bytes_per_element / t;
  }
  m.overhead_bytes = c.overhead_bytes;
  m.total_bytes = m.params_bytes + m.grads_bytes + m.optim_bytes + m.activation_bytes +
                  m.overhead_bytes;
  return m;
}

void require_dense(const Strategy& s) {
  if (s.params.moe) {
    throw UnsupportedStrategy(kModule, "MoE strategies are not modeled [strategy " + s.id + "]");
  }
}

}  // namespace

StageMemory stage_memory(const Strategy& s, int64_t stage, const MemCoeffs& c,
                         const TrainConfig& train) {
  require_dense(s);
  const auto slots = stage_slots(s);
  if (stage < 0 || stage >= static_cast<int64_t>(slots.size())) {
    throw ValidationError(kModule, "stage",
                          "stage " + std::to_string(stage) + " out of range [0, " +
                              std::to_string(slots.size()) + ")");
  }
  return stage_memory_in(s, slots, stage, c, train);
}

MemoryVerdict check_memory(const Strategy& s, const GpuCatalog& catalog, const MemCoeffs& c,
                           const TrainConfig& train) {
  require_dense(s);
  MemoryVerdict v;
  const auto slots = stage_slots(s);
  const GpuSpec* gpu = nullptr;
  for (size_t i = 0; i < slots.size(); ++i) {
    if (!gpu || gpu->name != slots[i].gpu_type) gpu = &catalog.at(slots[i].gpu_type);
    const double cap = gpu->mem_bytes;
    const double total = stage_memory_in(s, slots, static_cast<int64_t>(i), c, train).total_bytes;
    v.peak_bytes = std::max(v.peak_bytes, total);
    if (total > cap && v.fits) {
      v.fits = false;
      v.stage = static_cast<int64_t>(i);
      v.over_bytes = total - cap;
    }
  }
  return v;
}

MemoryFilterResult filter_by_memory(std::vector<Strategy> strategies, const GpuCatalog& catalog,
                                    const MemCoeffs& c, const TrainConfig& train) {
  MemoryFilterResult out;
  for (auto& s : strategies) {
    const MemoryVerdict v = check_memory(s, catalog, c, train);
    if (v.fits) {
      out.kept.push_back(std::move(s));
    } else {
      out.dropped.push_back({s.id, v.stage, v.over_bytes});
    }
  }
  return out;
}

}  // namespace parasearch
