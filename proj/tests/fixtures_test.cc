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

#include <gtest/gtest.h>

#include "parasearch/error.h"

namespace parasearch {
namespace {

TEST(Fixtures, AllLoad) {
  const auto names = list_fixtures();
  EXPECT_GE(names.size(), 6u);
  for (const auto& name : names) {
    SCOPED_TRACE(name);
    const Fixture f = load_fixture(name);
    EXPECT_EQ(f.name, name);
    EXPECT_FALSE(f.profile.empty());
    EXPECT_FALSE(f.rules.empty());
    EXPECT_GT(f.train.global_batch, 0);
    EXPECT_FALSE(generate_gpu_configs(f.request, f.catalog).empty());
    for (const char* gpu : {"A800", "H100", "H800"}) EXPECT_TRUE(f.catalog.find(gpu));
  }
}

TEST(Fixtures, CatalogOrdering) {
  const Fixture f = load_fixture("llama2-7b-a800-64");
  EXPECT_GT(f.catalog.at("H100").peak_flops, f.catalog.at("A800").peak_flops);
  EXPECT_GE(f.catalog.at("H100").peak_flops, f.catalog.at("H800").peak_flops);
  EXPECT_GT(f.catalog.at("H100").intra_node_bw, f.catalog.at("H800").intra_node_bw);
  EXPECT_EQ(param_count(f.arch), 6738415616);
}

TEST(Fixtures, UnknownNameListsAvailable) {
  try {
    load_fixture("nope");
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    for (const auto& name : list_fixtures()) EXPECT_NE(msg.find(name), std::string::npos) << msg;
  }
}

TEST(Fixtures, HeteroSetting) {
  const Fixture f = load_fixture("hetero-a800-h100-1024");
  EXPECT_EQ(f.request.mode, SearchMode::kHeterogeneous);
  ASSERT_EQ(f.request.type_limits.size(), 2u);
  EXPECT_EQ(f.request.type_limits[0].gpu_type, "A800");
  EXPECT_EQ(f.request.type_limits[0].count, 512);
  EXPECT_EQ(f.request.type_limits[1].gpu_type, "H100");
  EXPECT_EQ(f.request.gpu_count, 1024);
}

TEST(Fixtures, RequestParsing) {
  SearchRequest r;
  TrainConfig t;
  EXPECT_THROW(parse_request(nlohmann::json{{"bogus", 1}}, r, t), Error);
  parse_request(nlohmann::json{{"mode", "cost"}, {"gpu_type", "H100"}, {"max_gpus", 16}, {"seq_len", 512}}, r, t);
  EXPECT_EQ(r.mode, SearchMode::kCost);
  EXPECT_EQ(r.max_gpus, 16);
  EXPECT_EQ(t.seq_len, 512);
}

}  // namespace
}  // namespace parasearch
