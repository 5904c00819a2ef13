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


// Command-line front end: parasearch [--fixture NAME] [flags] > report.json

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "parasearch/error.h"
#include "parasearch/fixtures.h"
#include "parasearch/search.h"

namespace {

using namespace parasearch;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitEmpty = 2;

struct Flags {
  std::string fixture;
  bool list_fixtures = false;
  std::string mode;
  std::string model, catalog, space, rules, mem_coeffs, eff_model;
  std::optional<int64_t> global_batch, seq_len, gpu_count, max_gpus;
  std::string gpu_type;
  std::vector<std::string> type_limits;
  std::optional<double> max_money, total_tokens;
  int64_t top_k = 10;
  std::string out = "-";
  std::string format = "json";
  std::optional<int> workers;
  bool strict_dominance = false;
  bool emit_timings = false;
  std::string ladder;
};

TypeCount parse_type_limit(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
    throw ValidationError("cli", "type-limit", "expected TYPE=N, got '" + s + "'");
  }
  try {
    size_t used = 0;
    const std::string n = s.substr(eq + 1);
    const int64_t count = std::stoll(n, &used);
    if (used != n.size()) throw std::invalid_argument(n);
    return {s.substr(0, eq), count};
  } catch (const std::logic_error&) {
    throw ValidationError("cli", "type-limit", "bad count in '" + s + "'");
  }
}

SearchInputs build_inputs(const Flags& f) {
  SearchInputs in;
  if (!f.fixture.empty()) {
    in = load_fixture(f.fixture).inputs();
  } else if (f.model.empty() || f.catalog.empty()) {
    throw ValidationError("cli", "model", "--model and --catalog are required without --fixture");
  }
  if (!f.model.empty()) in.arch = load_model_arch(f.model);
  if (!f.catalog.empty()) in.catalog = load_catalog(f.catalog);
  if (!f.space.empty()) in.space = load_param_space(f.space);
  if (!f.rules.empty()) in.rules = load_rules(f.rules);
  if (!f.mem_coeffs.empty()) in.coeffs = load_mem_coeffs(f.mem_coeffs);
  if (!f.eff_model.empty()) in.eff = load_efficiency_model(f.eff_model, in.catalog);

  SearchRequest& r = in.request;
  if (!f.mode.empty()) r.mode = parse_search_mode(f.mode);
  if (!f.gpu_type.empty()) r.gpu_type = f.gpu_type;
  if (f.gpu_count) r.gpu_count = *f.gpu_count;
  if (f.max_gpus) r.max_gpus = *f.max_gpus;
  if (f.max_money) r.max_money = *f.max_money;
  if (!f.ladder.empty()) r.ladder = f.ladder == "linear" ? Ladder::kLinear : Ladder::kPow2;
  if (!f.type_limits.empty()) {
    r.type_limits.clear();
    for (const auto& s : f.type_limits) r.type_limits.push_back(parse_type_limit(s));
  }
  if (f.global_batch) in.train.global_batch = *f.global_batch;
  if (f.seq_len) in.train.seq_len = *f.seq_len;
  return in;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Search hybrid-parallel training strategies over GPU fleets."};
  Flags f;
  app.add_option("--fixture", f.fixture, "Load all inputs from a shipped fixture");
  app.add_flag("--list-fixtures", f.list_fixtures, "Print the shipped fixture names");
  app.add_option("--mode", f.mode, "homogeneous|heterogeneous|cost (or 1|2|3)");
  app.add_option("--model", f.model, "Model architecture JSON");
  app.add_option("--catalog", f.catalog, "GPU catalog JSON");
  app.add_option("--space", f.space, "Parameter space JSON");
  app.add_option("--rules", f.rules, "Rule file (default: built-in rules)");
  app.add_option("--mem-coeffs", f.mem_coeffs, "Memory coefficient JSON");
  app.add_option("--eff-model", f.eff_model, "Efficiency model JSON or profiling CSV");
  app.add_option("--global-batch", f.global_batch, "Global batch size")->check(CLI::PositiveNumber);
  app.add_option("--seq-len", f.seq_len, "Sequence length")->check(CLI::PositiveNumber);
  app.add_option("--gpu-type", f.gpu_type, "GPU type (modes 1 and 3)");
  app.add_option("--gpu-count", f.gpu_count, "GPU count (modes 1 and 2)")->check(CLI::PositiveNumber);
  app.add_option("--type-limit", f.type_limits, "TYPE=N per-type cap (mode 2, repeatable)");
  app.add_option("--max-gpus", f.max_gpus, "Largest GPU count (mode 3)")->check(CLI::PositiveNumber);
  app.add_option("--max-money", f.max_money, "Money budget for the selected strategy")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--total-tokens", f.total_tokens, "Tokens the money horizon covers")
      ->check(CLI::PositiveNumber);
  app.add_option("--top-k", f.top_k, "Strategies kept in the report")->check(CLI::PositiveNumber);
  app.add_option("--out", f.out, "Output path ('-' for stdout)");
  app.add_option("--format", f.format, "json|text")->check(CLI::IsMember({"json", "text"}));
  app.add_option("--workers", f.workers, "Worker threads (default: PARASEARCH_WORKERS or 1)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--strict-dominance", f.strict_dominance,
               "Keep points only strictly dominated on both axes");
  app.add_flag("--emit-timings", f.emit_timings, "Include wall-clock timings in JSON output");
  app.add_option("--ladder", f.ladder, "Mode-3 GPU count ladder")
      ->check(CLI::IsMember({"pow2", "linear"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (f.list_fixtures) {
      for (const auto& name : list_fixtures()) std::cout << name << "\n";
      return kExitOk;
    }
    const SearchInputs inputs = build_inputs(f);
    SearchOptions options;
    options.top_k = f.top_k;
    options.workers = f.workers ? *f.workers : default_workers();
    options.dominance = f.strict_dominance ? Dominance::kStrict : Dominance::kWeak;
    options.pricing.total_tokens = f.total_tokens;
    const SearchReport report = run_search(inputs, options);
    emit_report(report, f.out, parse_report_format(f.format), f.emit_timings);
    return report.strategies.empty() ? kExitEmpty : kExitOk;
  } catch (const Error& e) {
    std::cerr << "parasearch: error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "parasearch: error: " << e.what() << "\n";
    return kExitError;
  }
}
