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

#include "parasearch/catalog.h"

#include <fstream>
#include <set>
#include <sstream>

#include "parasearch/error.h"

namespace parasearch {
namespace {

constexpr const char* kModule = "catalog";

using nlohmann::json;

double number_field(const json& obj, const std::string& key,
                    const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError(kModule, where + key, "missing required field");
  }
  if (!it->is_number()) {
    throw ValidationError(kModule, where + key, "expected a number");
  }
  return it->get<double>();
}

int64_t integer_field(const json& obj, const std::string& key,
                      const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError(kModule, where + key, "missing required field");
  }
  if (!it->is_number_integer()) {
    throw ValidationError(kModule, where + key, "expected an integer");
  }
  return it->get<int64_t>();
}

std::string string_field(const json& obj, const std::string& key,
                         const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ValidationError(kModule, where + key, "expected a string");
  }
  return it->get<std::string>();
}

bool bool_field(const json& obj, const std::string& key, bool fallback,
                const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) {
    throw ValidationError(kModule, where + key, "expected a boolean");
  }
  return it->get<bool>();
}

void validate(const GpuSpec& g, const std::string& where) {
  if (g.name.empty()) throw ValidationError(kModule, where + "name", "empty");
  auto positive = [&](double v, const char* field) {
    if (!(v > 0)) {
      throw ValidationError(kModule, where + field,
                            "must be > 0 for GPU '" + g.name + "'");
    }
  };
  positive(g.peak_flops, "peak_flops");
  positive(g.mem_bytes, "mem_bytes");
  positive(g.intra_node_bw, "intra_node_bw");
  positive(g.inter_node_bw, "inter_node_bw");
  if (g.gpus_per_node < 1) {
    throw ValidationError(kModule, where + "gpus_per_node",
                          "must be >= 1 for GPU '" + g.name + "'");
  }
  if (!(g.price_per_second >= 0)) {
    throw ValidationError(kModule, where + "price_per_second",
                          "must be >= 0 for GPU '" + g.name + "'");
  }
  if (g.max_available && *g.max_available < 0) {
    throw ValidationError(kModule, where + "max_available",
                          "must be >= 0 for GPU '" + g.name + "'");
  }
}

}  // namespace

GpuCatalog::GpuCatalog(std::vector<GpuSpec> gpus) : gpus_(std::move(gpus)) {
  std::set<std::string> seen;
  for (size_t i = 0; i < gpus_.size(); ++i) {
    validate(gpus_[i], "gpus[" + std::to_string(i) + "].");
    if (!seen.insert(gpus_[i].name).second) {
      throw ValidationError(kModule, "name",
                            "duplicate GPU name '" + gpus_[i].name + "'");
    }
  }
}

const GpuSpec* GpuCatalog::find(const std::string& name) const {
  for (const auto& g : gpus_) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

const GpuSpec& GpuCatalog::at(const std::string& name) const {
  if (const GpuSpec* g = find(name)) return *g;
  throw ValidationError(kModule, "gpu_type", "unknown GPU type '" + name + "'");
}

json read_json_file(const std::filesystem::path& path,
                    const std::string& module) {
  std::ifstream in(path);
  if (!in) throw ParseError(module, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(module, path.string() + ": " + e.what());
  }
}

GpuCatalog parse_catalog(const json& j) {
  if (!j.is_object() || !j.contains("gpus") || !j["gpus"].is_array()) {
    throw ValidationError(kModule, "gpus", "expected {\"gpus\": [...]}");
  }
  std::vector<GpuSpec> gpus;
  for (size_t i = 0; i < j["gpus"].size(); ++i) {
    const json& e = j["gpus"][i];
    const std::string where = "gpus[" + std::to_string(i) + "].";
    if (!e.is_object()) throw ValidationError(kModule, where, "expected object");
    GpuSpec g;
    g.name = string_field(e, "name", where);
    g.peak_flops = number_field(e, "peak_flops", where);
    g.mem_bytes = number_field(e, "mem_bytes", where);
    g.intra_node_bw = number_field(e, "intra_node_bw", where);
    g.inter_node_bw = number_field(e, "inter_node_bw", where);
    g.gpus_per_node = static_cast<int>(integer_field(e, "gpus_per_node", where));
    const bool per_hour = e.contains("price_per_hour");
    const bool per_second = e.contains("price_per_second");
    if (per_hour == per_second) {
      throw ValidationError(kModule, where + "price_per_hour",
                            "exactly one of price_per_hour/price_per_second "
                            "is required");
    }
    g.price_per_second = per_hour ? number_field(e, "price_per_hour", where) / 3600.0
                                  : number_field(e, "price_per_second", where);
    if (e.contains("max_available") && !e["max_available"].is_null()) {
      g.max_available = integer_field(e, "max_available", where);
    }
    gpus.push_back(std::move(g));
  }
  return GpuCatalog(std::move(gpus));
}

GpuCatalog load_catalog(const std::filesystem::path& path) {
  return parse_catalog(read_json_file(path, kModule));
}

json catalog_to_json(const GpuCatalog& catalog) {
  json arr = json::array();
  for (const auto& g : catalog.gpus()) {
    json e = {{"name", g.name},
              {"peak_flops", g.peak_flops},
              {"mem_bytes", g.mem_bytes},
              {"intra_node_bw", g.intra_node_bw},
              {"inter_node_bw", g.inter_node_bw},
              {"gpus_per_node", g.gpus_per_node},
              {"price_per_second", g.price_per_second}};
    if (g.max_available) e["max_available"] = *g.max_available;
    arr.push_back(std::move(e));
  }
  return json{{"gpus", std::move(arr)}};
}

void validate(const ModelArch& a) {
  auto positive = [](int64_t v, const char* field) {
    if (v < 1) throw ValidationError(kModule, field, "must be >= 1");
  };
  positive(a.num_layers, "num_layers");
  positive(a.hidden_size, "hidden_size");
  positive(a.num_heads, "num_heads");
  positive(a.intermediate_size, "intermediate_size");
  positive(a.vocab_size, "vocab_size");
  if (a.hidden_size % a.num_heads != 0) {
    throw ValidationError(kModule, "hidden_size",
                          "hidden_size " + std::to_string(a.hidden_size) +
                              " is not divisible by num_heads " +
                              std::to_string(a.num_heads));
  }
}

void validate(const TrainConfig& t) {
  if (t.global_batch < 1) throw ValidationError(kModule, "global_batch", "must be >= 1");
  if (t.seq_len < 1) throw ValidationError(kModule, "seq_len", "must be >= 1");
  if (t.bytes_per_element < 1) {
    throw ValidationError(kModule, "bytes_per_element", "must be >= 1");
  }
}

ModelArch parse_model_arch(const json& j) {
  if (!j.is_object()) throw ValidationError(kModule, "model", "expected object");
  ModelArch a;
  a.family = string_field(j, "family", "");
  a.num_layers = integer_field(j, "num_layers", "");
  a.hidden_size = integer_field(j, "hidden_size", "");
  a.num_heads = integer_field(j, "num_heads", "");
  a.intermediate_size = integer_field(j, "intermediate_size", "");
  a.vocab_size = integer_field(j, "vocab_size", "");
  const bool llama_like = a.family.rfind("llama", 0) == 0;
  a.gated_mlp = bool_field(j, "gated_mlp", llama_like, "");
  a.tied_embeddings = bool_field(j, "tied_embeddings", !llama_like, "");
  a.final_norm = bool_field(j, "final_norm", llama_like, "");
  validate(a);
  return a;
}

ModelArch load_model_arch(const std::filesystem::path& path) {
  return parse_model_arch(read_json_file(path, kModule));
}

json model_arch_to_json(const ModelArch& a) {
  return json{{"family", a.family},
              {"num_layers", a.num_layers},
              {"hidden_size", a.hidden_size},
              {"num_heads", a.num_heads},
              {"intermediate_size", a.intermediate_size},
              {"vocab_size", a.vocab_size},
              {"gated_mlp", a.gated_mlp},
              {"tied_embeddings", a.tied_embeddings},
              {"final_norm", a.final_norm}};
}

int64_t layer_param_count(const ModelArch& a) {
  const int64_t h = a.hidden_size;
  const int64_t mlp_mats = a.gated_mlp ? 3 : 2;
  return 4 * h * h + mlp_mats * h * a.intermediate_size + 2 * h;
}

int64_t embedding_param_count(const ModelArch& a) {
  const int64_t table = a.vocab_size * a.hidden_size;
  return (a.tied_embeddings ? table : 2 * table) + (a.final_norm ? a.hidden_size : 0);
}

int64_t param_count(const ModelArch& a) {
  return a.num_layers * layer_param_count(a) + embedding_param_count(a);
}

}  // namespace parasearch
