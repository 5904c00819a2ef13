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


#include "parasearch/fixtures.h"

#include <algorithm>
#include <cstdlib>

#include "parasearch/error.h"

#ifndef PARASEARCH_FIXTURE_DIR
#define PARASEARCH_FIXTURE_DIR "fixtures"
#endif

namespace parasearch {
namespace {

constexpr const char* kModule = "fixtures";

}  // namespace

std::filesystem::path fixture_root() {
  if (const char* env = std::getenv("PARASEARCH_FIXTURES"); env && *env) return env;
  return PARASEARCH_FIXTURE_DIR;
}

std::vector<std::string> list_fixtures() {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(fixture_root(), ec)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "model.json")) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

void parse_request(const nlohmann::json& j, SearchRequest& r, TrainConfig& train) {
  if (!j.is_object()) throw ValidationError(kModule, "request", "expected a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "mode") {
        r.mode = parse_search_mode(v.get<std::string>());
      } else if (key == "gpu_type") {
        r.gpu_type = v.get<std::string>();
      } else if (key == "gpu_count") {
        r.gpu_count = v.get<int64_t>();
      } else if (key == "type_limits") {
        r.type_limits.clear();
        for (const auto& item : v) {
          r.type_limits.push_back({item.at("gpu_type").get<std::string>(),
                                   item.at("count").get<int64_t>()});
        }
      } else if (key == "max_gpus") {
        r.max_gpus = v.get<int64_t>();
      } else if (key == "max_money") {
        if (!v.is_null()) r.max_money = v.get<double>();
      } else if (key == "ladder") {
        const std::string s = v.get<std::string>();
        if (s != "pow2" && s != "linear") {
          throw ValidationError(kModule, "ladder", "expected pow2 or linear");
        }
        r.ladder = s == "pow2" ? Ladder::kPow2 : Ladder::kLinear;
      } else if (key == "global_batch") {
        train.global_batch = v.get<int64_t>();
      } else if (key == "seq_len") {
        train.seq_len = v.get<int64_t>();
      } else {
        throw ValidationError(kModule, key, "unknown request key");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(kModule, "request", e.what());
  }
}

Fixture load_fixture(const std::string& name) {
  const auto names = list_fixtures();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string available;
    for (const auto& n : names) available += (available.empty() ? "" : ", ") + n;
    throw Error(kModule, "unknown fixture '" + name + "' (available: " +
                             (available.empty() ? "none" : available) + ")");
  }
  Fixture f;
  f.name = name;
  f.dir = fixture_root() / name;
  f.arch = load_model_arch(f.dir / "model.json");
  f.catalog = load_catalog(f.dir / "catalog.json");
  f.space = load_param_space(f.dir / "space.json");
  f.rules = load_rules(f.dir / "rules.txt");
  f.coeffs = load_mem_coeffs(f.dir / "coeffs.json");
  f.profile = read_profile_csv(f.dir / "profile.csv", f.catalog);
  parse_request(read_json_file(f.dir / "request.json", kModule), f.request, f.train);
  validate(f.arch);
  validate(f.train);
  generate_gpu_configs(f.request, f.catalog);
  return f;
}

SearchInputs Fixture::inputs() const {
  SearchInputs in;
  in.request = request;
  in.arch = arch;
  in.train = train;
  in.catalog = catalog;
  in.space = space;
  in.rules = rules;
  in.coeffs = coeffs;
  return in;
}

EfficiencyModel Fixture::calibrated() const { return calibrate_efficiency(profile); }

}  // namespace parasearch
