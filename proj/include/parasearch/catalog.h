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

#ifndef PARASEARCH_CATALOG_H_
#define PARASEARCH_CATALOG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace parasearch {

/// Hardware record for one GPU type. Rates are per device.
struct GpuSpec {
  std::string name;
  double peak_flops = 0;        // FLOP/s at the configured precision
  double mem_bytes = 0;         // device memory capacity
  double intra_node_bw = 0;     // bytes/s, NVLink-class
  double inter_node_bw = 0;     // bytes/s, network-class
  int gpus_per_node = 1;
  double price_per_second = 0;  // currency/s
  std::optional<int64_t> max_available;

  bool operator==(const GpuSpec&) const = default;
};

class GpuCatalog {
 public:
  GpuCatalog() = default;
  /// Validates every entry and name uniqueness; throws ValidationError.
  explicit GpuCatalog(std::vector<GpuSpec> gpus);

  const std::vector<GpuSpec>& gpus() const { return gpus_; }
  size_t size() const { return gpus_.size(); }

  /// nullptr when absent.
  const GpuSpec* find(const std::string& name) const;
  /// Throws ValidationError naming the unknown type.
  const GpuSpec& at(const std::string& name) const;

 private:
  std::vector<GpuSpec> gpus_;
};

/// Decoder-only transformer shape.
///
/// `gated_mlp`, `tied_embeddings` and `final_norm` default from the family
/// name ("llama*" is gated, untied and carries a final norm) and may be set
/// explicitly in the model file.
struct ModelArch {
  std::string family;
  int64_t num_layers = 0;
  int64_t hidden_size = 0;
  int64_t num_heads = 0;
  int64_t intermediate_size = 0;
  int64_t vocab_size = 0;
  bool gated_mlp = false;
  bool tied_embeddings = true;
  bool final_norm = false;

  bool operator==(const ModelArch&) const = default;
};

struct TrainConfig {
  int64_t global_batch = 1;
  int64_t seq_len = 1;
  int64_t bytes_per_element = 2;

  bool operator==(const TrainConfig&) const = default;
};

GpuCatalog parse_catalog(const nlohmann::json& j);
GpuCatalog load_catalog(const std::filesystem::path& path);
/// Canonical form: prices always emitted per second.
nlohmann::json catalog_to_json(const GpuCatalog& catalog);

ModelArch parse_model_arch(const nlohmann::json& j);
ModelArch load_model_arch(const std::filesystem::path& path);
nlohmann::json model_arch_to_json(const ModelArch& arch);

/// Throws ValidationError on non-positive fields.
void validate(const ModelArch& arch);
void validate(const TrainConfig& train);

/// Weights of one transformer layer: 4h^2 attention, (2 or 3)·h·ffn MLP, 2h norms.
int64_t layer_param_count(const ModelArch& arch);
/// Input embedding plus output projection (once when tied) plus final norm.
int64_t embedding_param_count(const ModelArch& arch);
int64_t param_count(const ModelArch& arch);

/// Reads a whole file into a JSON value; throws ParseError tagged `module`.
nlohmann::json read_json_file(const std::filesystem::path& path,
                              const std::string& module);

}  // namespace parasearch

#endif  // PARASEARCH_CATALOG_H_
