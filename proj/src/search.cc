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


#include "parasearch/search.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <set>
#include <thread>

#include "parasearch/error.h"
#include "parasearch/hetero.h"

namespace parasearch {
namespace {

constexpr const char* kModule = "cli";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  enum class Kind { kSurvived, kRuleDropped, kMemoryDropped, kInfeasible, kUnsupported };
  Kind kind = Kind::kSurvived;
  size_t rule = 0;
  int64_t simulated = 0;
  int64_t partitions = 0;
  std::vector<EvaluatedStrategy> kept;
  std::exception_ptr error;
};

// Keeps the family members that can still reach the global frontier or top-k.
void prune(std::vector<EvaluatedStrategy>& ranked, const SearchOptions& options) {
  std::vector<ParetoPoint> points;
  points.reserve(ranked.size());
  for (const auto& e : ranked) points.push_back(e.point);
  std::set<std::string> frontier;
  for (const auto& p : pareto_pool(std::move(points), options.dominance)) {
    frontier.insert(p.strategy_id);
  }
  std::vector<EvaluatedStrategy> kept;
  for (size_t i = 0; i < ranked.size(); ++i) {
    if (static_cast<int64_t>(i) < options.top_k || frontier.count(ranked[i].strategy.id)) {
      kept.push_back(std::move(ranked[i]));
    }
  }
  ranked = std::move(kept);
}

Outcome evaluate_family(const Strategy& s, const SearchInputs& in, const SearchOptions& options) {
  Outcome out;
  if (auto rule = first_matching_rule(in.rules, s, in.train)) {
    out.kind = Outcome::Kind::kRuleDropped;
    out.rule = *rule;
    return out;
  }
  if (s.params.moe) {
    out.kind = Outcome::Kind::kUnsupported;
    return out;
  }
  if (s.gpu_config.heterogeneous()) {
    HeteroResult r = best_hetero_strategy(s, in.catalog, in.eff, in.coeffs, in.train,
                                          options.pricing);
    out.partitions = r.partitions;
    out.simulated = static_cast<int64_t>(r.ranked.size());
    if (r.partitions == 0) {
      out.kind = Outcome::Kind::kInfeasible;
    } else if (r.ranked.empty()) {
      out.kind = Outcome::Kind::kMemoryDropped;
    } else {
      prune(r.ranked, options);
      out.kept = std::move(r.ranked);
    }
    return out;
  }
  const MemoryVerdict verdict = check_memory(s, in.catalog, in.coeffs, in.train);
  if (!verdict.fits) {
    out.kind = Outcome::Kind::kMemoryDropped;
    return out;
  }
  EvaluatedStrategy e;
  e.cost = simulate_strategy(s, in.catalog, in.eff, in.train);
  e.point = make_point(s, e.cost, in.catalog, options.pricing);
  e.peak_memory_bytes = verdict.peak_bytes;
  e.strategy = s;
  out.simulated = 1;
  out.kept.push_back(std::move(e));
  return out;
}

nlohmann::json request_to_json(const SearchInputs& in, const SearchOptions& options,
                               const std::vector<GpuConfig>& configs) {
  const SearchRequest& r = in.request;
  nlohmann::json limits = nlohmann::json::array();
  for (const auto& l : r.type_limits) limits.push_back({{"gpu_type", l.gpu_type}, {"count", l.count}});
  nlohmann::json cfgs = nlohmann::json::array();
  for (const auto& c : configs) cfgs.push_back(gpu_config_to_json(c));
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& rule : in.rules) rules.push_back({{"name", rule.name}, {"source", rule.source}});
  nlohmann::json j = {
      {"mode", to_string(r.mode)},
      {"gpu_type", r.gpu_type},
      {"gpu_count", r.gpu_count},
      {"type_limits", limits},
      {"max_gpus", r.max_gpus},
      {"max_money", r.max_money ? nlohmann::json(*r.max_money) : nlohmann::json(nullptr)},
      {"ladder", r.ladder == Ladder::kPow2 ? "pow2" : "linear"},
      {"gpu_configs", cfgs},
      {"model", model_arch_to_json(in.arch)},
      {"train",
       {{"global_batch", in.train.global_batch},
        {"seq_len", in.train.seq_len},
        {"bytes_per_element", in.train.bytes_per_element}}},
      {"rules", rules},
      {"mem_coeffs", mem_coeffs_to_json(in.coeffs)},
      {"eff_model", efficiency_model_to_json(in.eff)},
      {"top_k", options.top_k},
      {"dominance", options.dominance == Dominance::kWeak ? "weak" : "strict"},
      {"total_tokens", options.pricing.total_tokens ? nlohmann::json(*options.pricing.total_tokens)
                                                    : nlohmann::json(nullptr)},
  };
  return j;
}

}  // namespace

int64_t SearchCounts::rule_dropped_total() const {
  int64_t total = 0;
  for (const auto& [name, n] : rule_dropped) total += n;
  return total;
}

bool SearchCounts::conserved() const {
  return generated ==
         survivors + rule_dropped_total() + memory_dropped + infeasible + unsupported;
}

int default_workers() {
  const char* env = std::getenv("PARASEARCH_WORKERS");
  if (!env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 0 || v > 1024) return 1;
  return static_cast<int>(v);
}

SearchReport run_search(const SearchInputs& in, const SearchOptions& options) {
  const auto start = Clock::now();
  if (options.top_k < 1) throw ValidationError(kModule, "top_k", "must be >= 1");
  validate(in.arch);
  validate(in.train);

  SearchReport report;
  const std::vector<GpuConfig> configs = generate_gpu_configs(in.request, in.catalog);
  report.request = request_to_json(in, options, configs);

  SearchCounts& counts = report.counts;
  counts.space_size = search_space_size(configs, in.space, in.arch, in.catalog);
  std::vector<Strategy> families;
  {
    StrategyEnumerator gen(configs, in.space, in.arch, in.train, in.catalog);
    Strategy s;
    while (gen.next(s)) families.push_back(s);
    counts.structural_skipped = gen.skipped();
  }
  counts.generated = static_cast<int64_t>(families.size());
  report.timings.search_s = seconds_since(start);

  const auto sim_start = Clock::now();
  std::vector<Outcome> outcomes(families.size());
  int workers = options.workers > 0 ? options.workers
                                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = static_cast<int>(std::min<size_t>(static_cast<size_t>(workers),
                                              std::max<size_t>(1, families.size())));
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next++; i < families.size(); i = next++) {
      try {
        outcomes[i] = evaluate_family(families[i], in, options);
      } catch (...) {
        outcomes[i].error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (const auto& rule : in.rules) counts.rule_dropped[rule.name] = 0;
  std::vector<EvaluatedStrategy> all;
  for (auto& o : outcomes) {
    if (o.error) std::rethrow_exception(o.error);
    counts.simulated += o.simulated;
    counts.partitions += o.partitions;
    switch (o.kind) {
      case Outcome::Kind::kSurvived:
        ++counts.survivors;
        for (auto& e : o.kept) all.push_back(std::move(e));
        break;
      case Outcome::Kind::kRuleDropped:
        ++counts.rule_dropped[in.rules[o.rule].name];
        break;
      case Outcome::Kind::kMemoryDropped:
        ++counts.memory_dropped;
        break;
      case Outcome::Kind::kInfeasible:
        ++counts.infeasible;
        break;
      case Outcome::Kind::kUnsupported:
        ++counts.unsupported;
        break;
    }
  }
  outcomes.clear();

  std::vector<ParetoPoint> points;
  points.reserve(all.size());
  for (const auto& e : all) points.push_back(e.point);
  report.frontier = pareto_pool(std::move(points), options.dominance);
  report.selected = select_best_within_budget(report.frontier, in.request.max_money);

  sort_evaluated(all);
  if (static_cast<int64_t>(all.size()) > options.top_k) all.resize(static_cast<size_t>(options.top_k));
  report.strategies = std::move(all);
  report.timings.simulation_s = seconds_since(sim_start);
  report.timings.end_to_end_s = seconds_since(start);
  return report;
}

}  // namespace parasearch
