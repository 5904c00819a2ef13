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


#include "parasearch/hetero.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include "parasearch/error.h"
#include "parasearch/fixtures.h"
#include "oracles.h"
#include "test_util.h"

namespace parasearch {
namespace {

TEST(PipelineTime, HandValues) {
  EXPECT_DOUBLE_EQ(hetero_pipeline_time({{1, 0}}, 2), 2);
  const StageTimes s = {{1, 0}, {2, 0}, {3, 0}};
  EXPECT_DOUBLE_EQ(hetero_pipeline_time(s, 4), 6 + 3 * 3);
  EXPECT_DOUBLE_EQ(simulate_pipeline_schedule(s, 4), 15);
  const StageTimes mixed = {{2, 1}, {1, 0}, {4, 0}};
  EXPECT_DOUBLE_EQ(hetero_pipeline_time(mixed, 2), 8 + 4);
  EXPECT_DOUBLE_EQ(simulate_pipeline_schedule(mixed, 2), 12);
  EXPECT_THROW(hetero_pipeline_time(s, 0), ValidationError);
  EXPECT_THROW(simulate_pipeline_schedule(s, 0), ValidationError);
}

TEST(PipelineTime, EqualStagesReduceToClassicFormula) {
  for (int P = 1; P <= 6; ++P) {
    for (int K = 1; K <= 8; ++K) {
      for (double t : {0.25, 1.0, 3.0}) {
        const StageTimes s(static_cast<size_t>(P), StageTime{t, 0});
        EXPECT_EQ(hetero_pipeline_time(s, K), (P + K - 1) * t);
      }
    }
  }
}

TEST(PipelineTime, MatchesScheduleOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> time(0.0, 10.0);
  std::uniform_int_distribution<int> pick_p(1, 6), pick_k(1, 8);
  for (int it = 0; it < 1000; ++it) {
    StageTimes s(static_cast<size_t>(pick_p(rng)));
    for (auto& st : s) st.t = 10.0 - time(rng);  // (0, 10]
    const int K = pick_k(rng);
    const double a = hetero_pipeline_time(s, K);
    const double b = simulate_pipeline_schedule(s, K);
    EXPECT_LE(std::abs(a - b) / b, 1e-12) << "instance " << it;
  }
}

TEST(Canonicalize, LabelingsCollapse) {
  std::set<std::vector<std::pair<std::string, int64_t>>> seen;
  for (int mask = 0; mask < 16; ++mask) {
    std::vector<std::string> labels;
    for (int i = 0; i < 4; ++i) labels.push_back(mask >> i & 1 ? "H100" : "A800");
    std::vector<std::pair<std::string, int64_t>> key;
    for (const auto& tc : canonicalize_partition(labels, {"A800", "H100"})) key.push_back({tc.gpu_type, tc.count});
    seen.insert(key);
  }
  EXPECT_EQ(seen.size(), 5u);
  const auto c = canonicalize_partition({"Z", "B", "A", "B"}, {"B"});
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].gpu_type, "B");
  EXPECT_EQ(c[0].count, 2);
  EXPECT_EQ(c[1].gpu_type, "A");
  EXPECT_EQ(c[2].gpu_type, "Z");
}

using Flat = testing::FlatPartition;
using testing::flatten;

TEST(Partitions, SmallCaseHasFive) {
  const auto parts = enumerate_partitions(2, 4, {{"A", 64}, {"B", 64}}, 1, 1);
  ASSERT_EQ(parts.size(), 5u);
  EXPECT_EQ(flatten(parts[0]), (Flat{{"B", 2, 2}}));
  EXPECT_EQ(flatten(parts[1]), (Flat{{"A", 1, 1}, {"B", 1, 3}}));
  EXPECT_EQ(flatten(parts[4]), (Flat{{"A", 2, 2}}));
  for (const auto& p : parts) {
    EXPECT_EQ(p.num_stages(), 2);
    EXPECT_EQ(p.num_layers(), 4);
  }
}

TEST(Partitions, MatchBruteForce) {
  const std::vector<std::vector<int64_t>> limit_sets = {{8}, {0, 8}, {2, 4}, {1, 1, 6}, {3, 0, 3}, {6, 6, 6}};
  for (int64_t P = 1; P <= 6; ++P) {
    for (int64_t N = 1; N <= 12; ++N) {
      for (const auto& ls : limit_sets) {
        for (int64_t D : {1, 2}) {
          std::vector<TypeCount> limits;
          for (size_t i = 0; i < ls.size(); ++i) limits.push_back({std::string(1, char('A' + i)), ls[i] * D});
          const auto got = enumerate_partitions(P, N, limits, D, 1);
          EXPECT_TRUE(testing::same_partitions(got, testing::brute_force_partitions(P, N, limits, D, 1)))
              << "P=" << P << " N=" << N;
          const double bound = std::pow(P + 1.0, ls.size() - 1.0) * std::pow(double(N), ls.size() - 1.0);
          EXPECT_LE(static_cast<double>(got.size()), bound);
        }
      }
    }
  }
}

TEST(Partitions, LimitsAndEdges) {
  for (const auto& p : enumerate_partitions(3, 9, {{"A", 0}, {"B", 64}}, 1, 1)) {
    ASSERT_EQ(p.segments.size(), 1u);
    EXPECT_EQ(p.segments[0].gpu_type, "B");
  }
  EXPECT_TRUE(enumerate_partitions(4, 3, {{"A", 64}}, 1, 1).empty());
  EXPECT_TRUE(enumerate_partitions(4, 8, {{"A", 3}}, 1, 1).empty());
  EXPECT_THROW(enumerate_partitions(0, 8, {{"A", 3}}, 1, 1), ValidationError);
  // Raising a limit never removes partitions.
  const auto small = enumerate_partitions(4, 12, {{"A", 4}, {"B", 8}}, 2, 1);
  const auto large = enumerate_partitions(4, 12, {{"A", 8}, {"B", 8}}, 2, 1);
  std::set<Flat> big;
  for (const auto& p : large) big.insert(flatten(p));
  for (const auto& p : small) EXPECT_TRUE(big.count(flatten(p)));
  EXPECT_GT(large.size(), small.size());
}

TEST(BestHetero, RanksFixtureFamily) {
  const Fixture f = load_fixture("hetero-a800-h100-1024");
  const auto configs = generate_gpu_configs(f.request, f.catalog);
  ASSERT_EQ(configs.size(), 1u);
  ASSERT_TRUE(configs[0].heterogeneous());
  ParallelParams p = testing::plain_params(4, 1, 256, 1);
  p.sequence_parallel = true;
  p.distributed_optimizer = true;
  p.recompute_granularity = RecomputeGranularity::kFull;
  p.recompute_method = RecomputeMethod::kUniform;
  const Strategy family = make_strategy(configs[0], p, f.arch);
  const HeteroResult r = best_hetero_strategy(family, f.catalog, EfficiencyModel{}, f.coeffs, f.train);
  EXPECT_EQ(r.partitions, static_cast<int64_t>(enumerate_partitions(4, 32, configs[0].limits, 256, 1).size()));
  EXPECT_EQ(static_cast<int64_t>(r.ranked.size()) + r.memory_dropped, r.partitions);
  ASSERT_FALSE(r.ranked.empty());
  for (size_t i = 1; i < r.ranked.size(); ++i) {
    EXPECT_FALSE(better(r.ranked[i].point, r.ranked[i - 1].point));
  }
  for (const auto& e : r.ranked) {
    ASSERT_TRUE(e.strategy.partition);
    EXPECT_EQ(e.strategy.partition->num_layers(), 32);
    EXPECT_GT(e.point.throughput, 0);
  }
  Strategy homo = testing::homo_strategy(f.arch, "A800", p);
  EXPECT_THROW(best_hetero_strategy(homo, f.catalog, EfficiencyModel{}, f.coeffs, f.train), ValidationError);
}

TEST(BestHetero, FasterTypeTakesMoreLayers) {
  const GpuCatalog cat({testing::make_gpu("Slow", 100e12), testing::make_gpu("Fast", 400e12)});
  ModelArch a = testing::llama2_7b();
  a.num_layers = 8;
  GpuConfig cfg;
  cfg.limits = {{"Slow", 8}, {"Fast", 8}};
  cfg.total = 16;
  cfg.entries = cfg.limits;
  const Strategy family = make_strategy(cfg, testing::plain_params(2, 1, 8), a);
  const HeteroResult r = best_hetero_strategy(family, cat, EfficiencyModel::constant(1.0), MemCoeffs{},
                                              TrainConfig{64, 1024, 2});
  ASSERT_FALSE(r.ranked.empty());
  const auto& best = *r.ranked.front().strategy.partition;
  ASSERT_EQ(best.segments.size(), 2u);
  EXPECT_EQ(best.segments[0].gpu_type, "Slow");
  EXPECT_LT(best.segments[0].layers_per_stage, best.segments[1].layers_per_stage);
}

}  // namespace
}  // namespace parasearch
