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


#include "parasearch/rulelang.h"

#include <gtest/gtest.h>

#include "rule_gen.h"
#include "test_util.h"

namespace parasearch {
namespace {

using testing::tiny_arch;

const TrainConfig kTrain{64, 16, 2};

Strategy rule_case(bool flash, RecomputeGranularity g, int64_t rnl, int64_t pp, int64_t tp) {
  ParallelParams p = testing::plain_params(pp, tp, 1);
  p.use_flash_attn = flash;
  p.recompute_granularity = g;
  p.recompute_method = g == RecomputeGranularity::kNone ? RecomputeMethod::kNone
                                                        : RecomputeMethod::kUniform;
  p.recompute_num_layers = rnl;
  ModelArch a = tiny_arch();
  a.num_layers = 32;
  return make_strategy(testing::homo_config("A800", 64), p, a);
}

bool eval_text(const std::string& text, const Bindings& env) {
  return std::get<bool>(evaluate(*parse_expr(text), env));
}

TEST(RuleParse, FlashAttentionRuleTree) {
  const ExprPtr e = parse_expr("$use_flash_attn != None && $recompute_granularity == selective");
  const ExprPtr want = Expr::binary(
      BinaryOp::kAnd, Expr::binary(BinaryOp::kNe, Expr::var("use_flash_attn"), Expr::none()),
      Expr::binary(BinaryOp::kEq, Expr::var("recompute_granularity"), Expr::symbol("selective")));
  EXPECT_TRUE(equal(*e, *want));
}

TEST(RuleParse, AndBindsTighterThanOr) {
  const ExprPtr e = parse_expr("$a == 1 || $b == 1 && $c == 1");
  auto eq = [](const char* v) {
    return Expr::binary(BinaryOp::kEq, Expr::var(v), Expr::integer(1));
  };
  const ExprPtr want =
      Expr::binary(BinaryOp::kOr, eq("a"), Expr::binary(BinaryOp::kAnd, eq("b"), eq("c")));
  EXPECT_TRUE(equal(*e, *want));
}

TEST(RuleParse, LeftAssociativeArithmetic) {
  const ExprPtr e = parse_expr("10 - 3 - 2");
  const ExprPtr want = Expr::binary(
      BinaryOp::kSub, Expr::binary(BinaryOp::kSub, Expr::integer(10), Expr::integer(3)),
      Expr::integer(2));
  EXPECT_TRUE(equal(*e, *want));
  MapBindings env;
  EXPECT_EQ(std::get<int64_t>(evaluate(*e, env)), 5);
  EXPECT_EQ(std::get<int64_t>(evaluate(*parse_expr("2 + 3 * 4 % 5"), env)), 4);
}

TEST(RuleParse, SyntaxErrorsArePositioned) {
  try {
    parse_expr("$a == ");
    FAIL();
  } catch (const RuleSyntaxError& e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_EQ(e.column(), 7);
  }
  try {
    parse_rules("ok: $a == 1\n\n$b = 2\n");
    FAIL();
  } catch (const RuleSyntaxError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("=="), std::string::npos);
  }
  EXPECT_THROW(parse_expr("($a == 1"), RuleSyntaxError);
  EXPECT_THROW(parse_expr("$a == 1)"), RuleSyntaxError);
  EXPECT_THROW(parse_expr("$a \xE2\x89\xA0 1"), RuleSyntaxError);
  EXPECT_THROW(parse_expr("$a / 2"), RuleSyntaxError);
  EXPECT_THROW(parse_expr("99999999999999999999"), RuleSyntaxError);
  EXPECT_THROW(parse_expr(""), RuleSyntaxError);
  EXPECT_THROW(parse_expr(std::string(1000, '(') + "1" + std::string(1000, ')')), RuleSyntaxError);
}

TEST(RuleParse, RuleFileNamesAndComments) {
  const RuleSet rules = parse_rules("# header\nfirst: $pp > 1\n\n  $tp > 1   # trailing\n");
  ASSERT_EQ(rules.size(), 2u);
  EXPECT_EQ(rules[0].name, "first");
  EXPECT_EQ(rules[1].name, "rule4");
  EXPECT_EQ(rules[1].line, 4);
  EXPECT_THROW(parse_rules("x: 1 == 1\nx: 2 == 2\n"), Error);
  EXPECT_TRUE(parse_rules("# only comments\n\n").empty());
}

TEST(RuleEval, BuiltInRuleExamples) {
  const RuleSet rules = parse_rules(kDefaultRulesText);
  ASSERT_EQ(rules.size(), 3u);
  const Rule& recompute = rules[1];
  const Rule& division = rules[2];
  EXPECT_FALSE(eval_rule(division, rule_case(true, RecomputeGranularity::kFull, 1, 4, 8), kTrain));
  EXPECT_TRUE(eval_rule(division, rule_case(true, RecomputeGranularity::kFull, 1, 3, 8), kTrain));
  EXPECT_TRUE(eval_rule(recompute, rule_case(true, RecomputeGranularity::kFull, 5, 4, 8), kTrain));
}

TEST(RuleEval, SixStrategyTable) {
  // flash, granularity, recompute layers, pp, tp -> kept?
  struct Row {
    bool flash;
    RecomputeGranularity g;
    int64_t rnl, pp, tp;
    bool kept;
  };
  using G = RecomputeGranularity;
  const Row rows[] = {
      {true, G::kSelective, 1, 4, 8, false},  // flash excludes selective
      {true, G::kFull, 2, 4, 8, true},
      {true, G::kFull, 5, 4, 8, false},       // 5 > 4 stages
      {true, G::kNone, 1, 3, 8, false},       // 64 % 24 != 0
      {false, G::kFull, 1, 2, 4, true},
      {true, G::kSelective, 8, 2, 2, false},  // first two rules both match
  };
  std::vector<Strategy> strategies;
  for (const auto& r : rows) strategies.push_back(rule_case(r.flash, r.g, r.rnl, r.pp, r.tp));
  const RuleFilterResult out = filter_by_rules(strategies, parse_rules(kDefaultRulesText), kTrain);
  ASSERT_EQ(out.kept.size(), 2u);
  EXPECT_EQ(out.kept[0].id, strategies[1].id);
  EXPECT_EQ(out.kept[1].id, strategies[4].id);
  EXPECT_EQ(out.drops, (std::vector<int64_t>{2, 1, 1}));
  for (size_t i = 0; i < strategies.size(); ++i) {
    EXPECT_EQ(!first_matching_rule(parse_rules(kDefaultRulesText), strategies[i], kTrain).has_value(),
              rows[i].kept)
        << i;
  }
}

TEST(RuleEval, FilterEdgeCases) {
  std::vector<Strategy> strategies = {rule_case(true, RecomputeGranularity::kFull, 1, 4, 8),
                                      rule_case(false, RecomputeGranularity::kNone, 1, 2, 4)};
  EXPECT_EQ(filter_by_rules(strategies, {}, kTrain).kept.size(), 2u);
  const RuleFilterResult all = filter_by_rules(strategies, parse_rules("always: true"), kTrain);
  EXPECT_TRUE(all.kept.empty());
  EXPECT_EQ(all.drops, (std::vector<int64_t>{2}));
}

TEST(RuleEval, NoneAndSymbols) {
  const Strategy s = rule_case(true, RecomputeGranularity::kNone, 1, 4, 8);
  StrategyBindings env(s, kTrain);
  EXPECT_TRUE(eval_text("$recompute_granularity == None", env));
  EXPECT_TRUE(eval_text("$num_layers_per_virtual_pipeline_stage == None", env));
  EXPECT_FALSE(eval_text("$use_flash_attn == None", env));
  EXPECT_TRUE(eval_text("$use_flash_attn == true", env));
  EXPECT_FALSE(eval_text("$dp * $pp * $tp == $num_gpus", env));  // dp left at 1
  const Strategy f = rule_case(true, RecomputeGranularity::kFull, 1, 4, 8);
  StrategyBindings fenv(f, kTrain);
  EXPECT_TRUE(eval_text("$recompute_granularity == full && $recompute_method == uniform", fenv));
  EXPECT_TRUE(eval_text("$global_batch_size == 64 && $seq_length == 16", fenv));
}

TEST(RuleEval, Errors) {
  MapBindings env;
  env.set("x", int64_t{3});
  env.set("s", Symbol{"full"});
  env.set("big", int64_t{INT64_MAX});
  const Rule unbound{"r1", parse_expr("$nope == 1"), "$nope == 1", 1};
  try {
    eval_rule(unbound, env);
    FAIL();
  } catch (const RuleEvalError& e) {
    EXPECT_EQ(e.rule(), "r1");
  }
  EXPECT_THROW(evaluate(*parse_expr("$s == 1"), env), RuleEvalError);
  EXPECT_THROW(evaluate(*parse_expr("$s < full"), env), RuleEvalError);
  EXPECT_THROW(evaluate(*parse_expr("$big + 1"), env), RuleEvalError);
  EXPECT_THROW(evaluate(*parse_expr("$x % 0"), env), RuleEvalError);
  EXPECT_THROW(evaluate(*parse_expr("$x && true"), env), RuleEvalError);
  EXPECT_THROW(eval_rule({"r2", parse_expr("$x + 1"), "", 1}, env), RuleEvalError);
  // Short circuit never reaches the unbound variable.
  EXPECT_FALSE(std::get<bool>(evaluate(*parse_expr("false && $nope == 1"), env)));
  EXPECT_TRUE(std::get<bool>(evaluate(*parse_expr("true || $nope == 1"), env)));
}

TEST(RuleEval, ErrorsAreTaggedWithStrategyId) {
  const Strategy s = rule_case(true, RecomputeGranularity::kFull, 1, 4, 8);
  try {
    first_matching_rule(parse_rules("bad: $nope == 1"), s, kTrain);
    FAIL();
  } catch (const RuleEvalError& e) {
    EXPECT_NE(std::string(e.what()).find(s.id), std::string::npos);
    EXPECT_EQ(e.rule(), "bad");
  }
}

TEST(RuleRoundTrip, RandomTreesKeepStructureAndValue) {
  testing::ExprGenerator gen(7);
  for (int i = 0; i < 2000; ++i) {
    const auto tree = gen.boolean(4);
    const std::string text = testing::full_text(*tree);
    const ExprPtr parsed = parse_expr(text);
    const ExprPtr reparsed = parse_expr(render(*parsed));
    ASSERT_TRUE(equal(*parsed, *reparsed)) << text << " -> " << render(*parsed);
    const testing::GenEnv e = gen.env();
    const MapBindings env = e.bindings();
    ASSERT_EQ(std::get<bool>(evaluate(*reparsed, env)), testing::eval_gen(*tree, e).b) << text;
  }
}

TEST(RuleRoundTrip, PrecedenceLaws) {
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int c = 0; c < 2; ++c) {
        MapBindings env;
        env.set("a", a == 1);
        env.set("b", b == 1);
        env.set("c", c == 1);
        EXPECT_EQ(eval_text("$a || $b && $c", env), eval_text("$a || ($b && $c)", env));
        EXPECT_EQ(eval_text("$a && $b || $c", env), eval_text("($a && $b) || $c", env));
        EXPECT_EQ(eval_text("$a && $b && $c", env), eval_text("($a && $b) && $c", env));
      }
    }
  }
}

TEST(RuleParse, FuzzNeverCrashes) {
  std::mt19937_64 rng(11);
  const std::string alphabet = "$abcxyz_01239 ()=!<>&|+-*%#:\n\tNonetruefalse\xE2\x89";
  for (int i = 0; i < 5000; ++i) {
    std::string text;
    const int len = static_cast<int>(rng() % 40);
    for (int k = 0; k < len; ++k) text += alphabet[rng() % alphabet.size()];
    try {
      parse_rules(text);
    } catch (const RuleSyntaxError&) {
    } catch (const Error&) {
    }
  }
}

}  // namespace
}  // namespace parasearch
