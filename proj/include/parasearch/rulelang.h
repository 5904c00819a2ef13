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

#ifndef PARASEARCH_RULELANG_H_
#define PARASEARCH_RULELANG_H_

// User rules over strategy parameters. A rule that evaluates to true drops the
// strategy. Grammar, loosest binding first:
//
//   or      := and ( "||" and )*
//   and     := cmp ( "&&" cmp )*
//   cmp     := sum ( ("=="|"!="|"<"|"<="|">"|">=") sum )*
//   sum     := product ( ("+"|"-") product )*
//   product := primary ( ("*"|"%") primary )*
//   primary := "$" ident | integer | "true" | "false" | "None" | ident
//            | "(" or ")"
//
// All binary operators associate to the left. A bare identifier is a
// symbolic literal (selective, block, ...). "None" matches absent values.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "parasearch/catalog.h"
#include "parasearch/error.h"
#include "parasearch/strategy.h"

namespace parasearch {

class RuleSyntaxError : public Error {
 public:
  RuleSyntaxError(int line, int column, const std::string& message)
      : Error("rulelang", "line " + std::to_string(line) + ", column " +
                              std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class RuleEvalError : public Error {
 public:
  RuleEvalError(std::string rule, std::string message)
      : Error("rulelang", "rule '" + rule + "': " + message),
        rule_(std::move(rule)),
        detail_(std::move(message)) {}

  const std::string& rule() const { return rule_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string rule_;
  std::string detail_;
};

enum class BinaryOp { kOr, kAnd, kEq, kNe, kLt, kLe, kGt, kGe, kAdd, kSub, kMul, kMod };

const char* to_string(BinaryOp op);
int precedence(BinaryOp op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { kVar, kInt, kBool, kSymbol, kNone, kBinary };

  Kind kind = Kind::kNone;
  std::string name;  // variable (without '$') or symbol
  int64_t int_value = 0;
  bool bool_value = false;
  BinaryOp op = BinaryOp::kOr;
  ExprPtr lhs;
  ExprPtr rhs;
  int column = 0;

  static ExprPtr var(std::string name);
  static ExprPtr integer(int64_t v);
  static ExprPtr boolean(bool v);
  static ExprPtr symbol(std::string name);
  static ExprPtr none();
  static ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
};

/// Structural equality, ignoring source positions.
bool equal(const Expr& a, const Expr& b);

/// Minimal parentheses by default; `fully_parenthesized` wraps every binary node.
std::string render(const Expr& e, bool fully_parenthesized = false);

struct NoneValue {
  bool operator==(const NoneValue&) const = default;
};
struct Symbol {
  std::string name;
  bool operator==(const Symbol&) const = default;
};
using Value = std::variant<NoneValue, int64_t, bool, Symbol>;

std::string to_string(const Value& v);

/// Variable environment for evaluation. nullopt means "unbound".
class Bindings {
 public:
  virtual ~Bindings() = default;
  virtual std::optional<Value> lookup(std::string_view name) const = 0;
};

class MapBindings : public Bindings {
 public:
  MapBindings() = default;
  explicit MapBindings(std::map<std::string, Value, std::less<>> values)
      : values_(std::move(values)) {}

  void set(const std::string& name, Value v) { values_[name] = std::move(v); }
  std::optional<Value> lookup(std::string_view name) const override;

 private:
  std::map<std::string, Value, std::less<>> values_;
};

/// Exposes strategy fields under their parameter names, plus num_gpus,
/// num_layers and a few model/run built-ins. Flags bind as booleans, enums
/// as symbols, and unset options ("none" recompute, absent vpp/MoE) as None.
class StrategyBindings : public Bindings {
 public:
  StrategyBindings(const Strategy& s, const TrainConfig& train) : s_(s), train_(train) {}
  std::optional<Value> lookup(std::string_view name) const override;

 private:
  const Strategy& s_;
  const TrainConfig& train_;
};

struct Rule {
  std::string name;
  ExprPtr expr;
  std::string source;
  int line = 0;
};

using RuleSet = std::vector<Rule>;

/// Parses one expression; `line` and `column_offset` only affect diagnostics.
ExprPtr parse_expr(std::string_view text, int line = 1, int column_offset = 0);

/// One rule per non-empty line; '#' starts a comment. A line may start with
/// `name:` to name the rule, otherwise it is named "rule<line>".
RuleSet parse_rules(std::string_view text);
RuleSet load_rules(const std::filesystem::path& path);

/// The legality rules shipped by default.
extern const char* const kDefaultRulesText;

Value evaluate(const Expr& e, const Bindings& env, const std::string& rule_name = "<expr>");
/// Throws RuleEvalError unless the expression yields a boolean.
bool eval_rule(const Rule& rule, const Bindings& env);
bool eval_rule(const Rule& rule, const Strategy& s, const TrainConfig& train);

/// Index of the first rule that matches, or nullopt when every rule is false.
/// Errors are rethrown tagged with the strategy id.
std::optional<size_t> first_matching_rule(const RuleSet& rules, const Strategy& s,
                                          const TrainConfig& train);

struct RuleFilterResult {
  std::vector<Strategy> kept;
  std::vector<int64_t> drops;  // per rule, attributed to the first match
};

RuleFilterResult filter_by_rules(std::vector<Strategy> strategies, const RuleSet& rules,
                                 const TrainConfig& train);

}  // namespace parasearch

#endif  // PARASEARCH_RULELANG_H_
