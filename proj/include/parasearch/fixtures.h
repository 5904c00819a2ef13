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


#ifndef PARASEARCH_FIXTURES_H_
#define PARASEARCH_FIXTURES_H_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "parasearch/catalog.h"
#include "parasearch/costsim.h"
#include "parasearch/memest.h"
#include "parasearch/modes.h"
#include "parasearch/rulelang.h"
#include "parasearch/search.h"
#include "parasearch/strategy.h"

namespace parasearch {

/// A named, self-contained set of search inputs under
/// `<root>/<name>/{model,catalog,space,coeffs,request}.json`, `rules.txt`
/// and `profile.csv`.
struct Fixture {
  std::string name;
  std::filesystem::path dir;
  ModelArch arch;
  GpuCatalog catalog;
  ParamSpace space;
  RuleSet rules;
  MemCoeffs coeffs;
  std::vector<ProfileSample> profile;
  SearchRequest request;
  TrainConfig train;

  /// Inputs for run_search with the constant default efficiency.
  SearchInputs inputs() const;
  /// Lookup efficiency calibrated from `profile`.
  EfficiencyModel calibrated() const;
};

/// PARASEARCH_FIXTURES if set, else the directory baked in at build time.
std::filesystem::path fixture_root();
std::vector<std::string> list_fixtures();

/// Throws Error listing the available names when `name` is unknown.
Fixture load_fixture(const std::string& name);

/// Request file: {"mode", "gpu_type", "gpu_count", "type_limits": {type: n},
/// "max_gpus", "max_money", "ladder", "global_batch", "seq_len"}.
void parse_request(const nlohmann::json& j, SearchRequest& request, TrainConfig& train);

}  // namespace parasearch

#endif  // PARASEARCH_FIXTURES_H_
