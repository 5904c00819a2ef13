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


#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "parasearch/error.h"
#include "parasearch/search.h"

namespace parasearch {
namespace {

constexpr const char* kModule = "cli";

nlohmann::json counts_to_json(const SearchCounts& c) {
  return {{"space_size", c.space_size},
          {"structural_skipped", c.structural_skipped},
          {"generated", c.generated},
          {"rule_dropped", c.rule_dropped},
          {"rule_dropped_total", c.rule_dropped_total()},
          {"memory_dropped", c.memory_dropped},
          {"infeasible", c.infeasible},
          {"unsupported", c.unsupported},
          {"survivors", c.survivors},
          {"simulated", c.simulated},
          {"partitions", c.partitions}};
}

nlohmann::json evaluated_to_json(const EvaluatedStrategy& e, size_t rank) {
  const Strategy& s = e.strategy;
  return {{"rank", rank},
          {"id", s.id},
          {"gpu_config", gpu_config_to_json(s.gpu_config)},
          {"params", params_to_json(s.params)},
          {"partition", s.partition ? partition_to_json(*s.partition) : nlohmann::json(nullptr)},
          {"cost", cost_to_json(e.cost)},
          {"point", point_to_json(e.point)},
          {"peak_memory_bytes", e.peak_memory_bytes}};
}

std::string format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

std::string format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

std::string layout(const Strategy& s) {
  if (!s.partition) return s.gpu_config.entries.empty() ? "-" : s.gpu_config.entries.front().gpu_type;
  std::string out;
  for (const auto& seg : s.partition->segments) {
    if (!out.empty()) out += '+';
    out += seg.gpu_type + ":" + std::to_string(seg.stages) + "x" + std::to_string(seg.layers_per_stage);
  }
  return out;
}

}  // namespace

ReportFormat parse_report_format(const std::string& s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "text") return ReportFormat::kText;
  throw ValidationError(kModule, "format", "expected json or text, got '" + s + "'");
}

nlohmann::json report_to_json(const SearchReport& report, bool include_timings) {
  nlohmann::json strategies = nlohmann::json::array();
  for (size_t i = 0; i < report.strategies.size(); ++i) {
    strategies.push_back(evaluated_to_json(report.strategies[i], i + 1));
  }
  nlohmann::json frontier = nlohmann::json::array();
  for (const auto& p : report.frontier) frontier.push_back(point_to_json(p));
  nlohmann::json j = {{"schema", 1},
                      {"request", report.request},
                      {"counts", counts_to_json(report.counts)},
                      {"strategies", strategies},
                      {"frontier", frontier},
                      {"selected", report.selected ? point_to_json(*report.selected)
                                                   : nlohmann::json(nullptr)}};
  if (include_timings) {
    j["timings"] = {{"search_s", report.timings.search_s},
                    {"simulation_s", report.timings.simulation_s},
                    {"end_to_end_s", report.timings.end_to_end_s}};
  }
  return j;
}

std::string report_to_text(const SearchReport& report) {
  const SearchCounts& c = report.counts;
  std::ostringstream out;
  out << "mode " << report.request.value("mode", std::string("?")) << "\n";
  out << format("generated %lld  survivors %lld  memory-dropped %lld  infeasible %lld  "
                "unsupported %lld  simulated %lld\n",
                static_cast<long long>(c.generated), static_cast<long long>(c.survivors),
                static_cast<long long>(c.memory_dropped), static_cast<long long>(c.infeasible),
                static_cast<long long>(c.unsupported), static_cast<long long>(c.simulated));
  for (const auto& [name, n] : c.rule_dropped) {
    out << format("  rule %-24s dropped %lld\n", name.c_str(), static_cast<long long>(n));
  }
  out << format("%4s  %-16s  %-20s %3s %3s %4s %3s  %-9s %3s %3s  %14s  %10s  %12s  %8s\n", "rank",
                "id", "gpus", "pp", "tp", "dp", "mb", "recompute", "sp", "do", "tokens/s",
                "T_total", "money", "mem GiB");
  for (size_t i = 0; i < report.strategies.size(); ++i) {
    const auto& e = report.strategies[i];
    const ParallelParams& p = e.strategy.params;
    out << format("%4zu  %-16s  %-20s %3lld %3lld %4lld %3lld  %-9s %3d %3d  %14.1f  %10.4f  %12.4f  %8.2f\n",
                  i + 1, e.strategy.id.c_str(), layout(e.strategy).c_str(),
                  static_cast<long long>(p.pp), static_cast<long long>(p.tp),
                  static_cast<long long>(p.dp), static_cast<long long>(p.micro_batch),
                  to_string(p.recompute_granularity), p.sequence_parallel ? 1 : 0,
                  p.distributed_optimizer ? 1 : 0, e.cost.throughput_tokens_per_s, e.cost.t_total,
                  e.point.money, e.peak_memory_bytes / (1024.0 * 1024.0 * 1024.0));
  }
  out << format("frontier %zu points\n", report.frontier.size());
  if (report.selected) {
    out << format("selected %s  %.1f tokens/s  money %.4f\n", report.selected->strategy_id.c_str(),
                  report.selected->throughput, report.selected->money);
  } else {
    out << "selected none\n";
  }
  out << format("timings search %.3f s  simulation %.3f s  end-to-end %.3f s\n",
                report.timings.search_s, report.timings.simulation_s, report.timings.end_to_end_s);
  return out.str();
}

void emit_report(const SearchReport& report, const std::filesystem::path& path,
                 ReportFormat format, bool include_timings) {
  const std::string body = format == ReportFormat::kJson
                               ? report_to_json(report, include_timings).dump(2) + "\n"
                               : report_to_text(report);
  if (path.empty() || path == "-") {
    std::cout << body;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, "cannot write " + path.string());
  out << body;
  if (!out) throw Error(kModule, "write failed for " + path.string());
}

}  // namespace parasearch
