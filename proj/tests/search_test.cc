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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "parasearch/fixtures.h"

namespace parasearch {
namespace {

std::string dump(const SearchReport& r) { return report_to_json(r).dump(2); }

void expect_conserved(const SearchCounts& c) {
  int64_t drops = c.memory_dropped + c.infeasible + c.unsupported;
  for (const auto& [rule, n] : c.rule_dropped) drops += n;
  EXPECT_EQ(c.generated, c.survivors + drops);
  EXPECT_TRUE(c.conserved());
}

TEST(Search, CountsConservedOnEveryFixture) {
  for (const auto& name : list_fixtures()) {
    SCOPED_TRACE(name);
    const SearchReport r = run_search(load_fixture(name).inputs(), SearchOptions{});
    expect_conserved(r.counts);
    EXPECT_GT(r.counts.generated, 0);
    EXPECT_EQ(r.counts.rule_dropped.size(), load_fixture(name).rules.size());
    EXPECT_LE(r.strategies.size(), 10u);
    ASSERT_FALSE(r.strategies.empty());
    for (size_t i = 1; i < r.strategies.size(); ++i) {
      EXPECT_FALSE(better(r.strategies[i].point, r.strategies[i - 1].point));
    }
    ASSERT_TRUE(r.selected);
    EXPECT_EQ(r.selected->strategy_id, r.frontier.front().strategy_id);
  }
}

TEST(Search, DeterministicAcrossRunsAndWorkers) {
  const SearchInputs in = load_fixture("llama2-7b-a800-64").inputs();
  SearchOptions one;
  one.workers = 1;
  SearchOptions four;
  four.workers = 4;
  const std::string a = dump(run_search(in, one));
  EXPECT_EQ(a, dump(run_search(in, one)));
  EXPECT_EQ(a, dump(run_search(in, four)));

  const SearchInputs het = load_fixture("hetero-a800-h100-1024").inputs();
  EXPECT_EQ(dump(run_search(het, one)), dump(run_search(het, four)));
}

TEST(Search, TopKAndBudget) {
  const SearchInputs in = load_fixture("llama2-7b-h100-cost").inputs();
  SearchOptions opt;
  opt.top_k = 3;
  const SearchReport r = run_search(in, opt);
  EXPECT_EQ(r.strategies.size(), 3u);
  const auto j = report_to_json(r);
  EXPECT_EQ(j["schema"], 1);
  EXPECT_EQ(j["strategies"].size(), 3u);
  EXPECT_EQ(j["strategies"][0]["rank"], 1);
  EXPECT_FALSE(j.contains("timings"));
  EXPECT_TRUE(report_to_json(r, true).contains("timings"));

  // A budget below the cheapest frontier point selects nothing.
  SearchInputs poor = in;
  poor.request.max_money = 0.0;
  EXPECT_FALSE(run_search(poor, opt).selected);
  if (r.frontier.size() > 1) {
    SearchInputs mid = in;
    mid.request.max_money = r.frontier.back().money;
    const auto sel = run_search(mid, opt).selected;
    ASSERT_TRUE(sel);
    EXPECT_LE(sel->money, r.frontier.back().money);
  }
}

TEST(Search, SingletonSpace) {
  SearchInputs in = load_fixture("llama2-7b-a800-64").inputs();
  for (size_t i = 0; i < kNumFields; ++i) {
    auto& list = in.space[static_cast<Field>(i)];
    if (list.size() > 1) list.resize(1);
  }
  in.space[Field::kPipelineParallel] = {2};
  in.space[Field::kTensorParallel] = {4};
  const SearchReport r = run_search(in, SearchOptions{});
  EXPECT_EQ(r.counts.space_size, 1);
  EXPECT_EQ(r.counts.generated, 1);
  ASSERT_EQ(r.strategies.size(), 1u);
  EXPECT_EQ(r.strategies[0].strategy.params.dp, 8);
  expect_conserved(r.counts);
}

TEST(Search, RuleDropsEverything) {
  SearchInputs in = load_fixture("llama2-7b-a800-64").inputs();
  in.rules = parse_rules("everything: 1 == 1\n");
  const SearchReport r = run_search(in, SearchOptions{});
  EXPECT_TRUE(r.strategies.empty());
  EXPECT_TRUE(r.frontier.empty());
  EXPECT_FALSE(r.selected);
  EXPECT_EQ(r.counts.rule_dropped.at("everything"), r.counts.generated);
  expect_conserved(r.counts);
  const auto j = report_to_json(r);
  EXPECT_TRUE(j["strategies"].empty());
  EXPECT_TRUE(j["selected"].is_null());
  EXPECT_FALSE(report_to_text(r).empty());
}

#ifdef PARASEARCH_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(PARASEARCH_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const auto dir = std::filesystem::path(::testing::TempDir());
  const auto rules = dir / "drop_all.rules";
  std::ofstream(rules) << "everything: 1 == 1\n";
  EXPECT_EQ(run_cli("--fixture llama2-7b-a800-64 --rules " + rules.string()), 2);
  EXPECT_EQ(run_cli("--fixture no-such-fixture"), 1);
  EXPECT_EQ(run_cli("--list-fixtures"), 0);

  const auto out = dir / "report.json";
  EXPECT_EQ(run_cli("--fixture llama2-7b-a800-64 --top-k 2 --out " + out.string()), 0);
  std::ifstream f(out);
  const auto j = nlohmann::json::parse(f);
  EXPECT_EQ(j["strategies"].size(), 2u);
  EXPECT_EQ(j["counts"]["generated"], run_search(load_fixture("llama2-7b-a800-64").inputs(), {}).counts.generated);
}
#endif

}  // namespace
}  // namespace parasearch
