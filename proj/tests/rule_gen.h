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


// Random well-typed rule expressions with an evaluator that does not use the
// library, for round-trip and precedence checks.

#ifndef PARASEARCH_TESTS_RULE_GEN_H_
#define PARASEARCH_TESTS_RULE_GEN_H_

#include <algorithm>
#include <cstdint>
#include <memory>
#include <random>
#include <string>

#include "parasearch/rulelang.h"

namespace parasearch::testing {

struct GenNode {
  enum Kind { kBoolVar, kBoolLit, kIntVar, kIntLit, kOp } kind = kIntLit;
  std::string op;  // "||", "&&", "==", "<", "+", "%", ...
  std::string var;
  int64_t value = 0;
  std::unique_ptr<GenNode> lhs, rhs;
};

struct GenEnv {
  bool a = false, b = false, c = false;
  int64_t x = 0, y = 0, z = 0;

  MapBindings bindings() const {
    MapBindings m;
    m.set("a", a);
    m.set("b", b);
    m.set("c", c);
    m.set("x", x);
    m.set("y", y);
    m.set("z", z);
    return m;
  }
};

class ExprGenerator {
 public:
  explicit ExprGenerator(uint64_t seed) : rng_(seed) {}

  std::unique_ptr<GenNode> boolean(int depth) {
    auto n = std::make_unique<GenNode>();
    const int pick = depth <= 0 ? pick_int(0, 1) : pick_int(0, 5);
    if (pick == 0) {
      n->kind = GenNode::kBoolVar;
      n->var = std::string(1, static_cast<char>('a' + pick_int(0, 2)));
    } else if (pick == 1) {
      n->kind = GenNode::kBoolLit;
      n->value = pick_int(0, 1);
    } else if (pick <= 3) {
      static const char* kCmp[] = {"==", "!=", "<", "<=", ">", ">="};
      n->kind = GenNode::kOp;
      n->op = kCmp[pick_int(0, 5)];
      // Shallow arithmetic keeps products far from int64 overflow.
      n->lhs = integer(std::min(depth - 1, 2));
      n->rhs = integer(std::min(depth - 1, 2));
    } else {
      n->kind = GenNode::kOp;
      n->op = pick_int(0, 1) ? "&&" : "||";
      n->lhs = boolean(depth - 1);
      n->rhs = boolean(depth - 1);
    }
    return n;
  }

  std::unique_ptr<GenNode> integer(int depth) {
    auto n = std::make_unique<GenNode>();
    const int pick = depth <= 0 ? pick_int(0, 1) : pick_int(0, 3);
    if (pick == 0) {
      n->kind = GenNode::kIntVar;
      n->var = std::string(1, static_cast<char>('x' + pick_int(0, 2)));
    } else if (pick == 1) {
      n->kind = GenNode::kIntLit;
      n->value = pick_int(0, 9);
    } else {
      static const char* kArith[] = {"+", "-", "*", "%"};
      n->kind = GenNode::kOp;
      n->op = kArith[pick_int(0, 3)];
      n->lhs = integer(depth - 1);
      if (n->op == "%") {
        // Positive literal divisor keeps evaluation total.
        n->rhs = std::make_unique<GenNode>();
        n->rhs->kind = GenNode::kIntLit;
        n->rhs->value = pick_int(1, 9);
      } else {
        n->rhs = integer(depth - 1);
      }
    }
    return n;
  }

  GenEnv env() {
    GenEnv e;
    e.a = pick_int(0, 1);
    e.b = pick_int(0, 1);
    e.c = pick_int(0, 1);
    e.x = pick_int(-20, 20);
    e.y = pick_int(-20, 20);
    e.z = pick_int(-20, 20);
    return e;
  }

  int pick_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Every binary node wrapped in parentheses.
inline std::string full_text(const GenNode& n) {
  switch (n.kind) {
    case GenNode::kBoolVar:
    case GenNode::kIntVar:
      return "$" + n.var;
    case GenNode::kBoolLit:
      return n.value ? "true" : "false";
    case GenNode::kIntLit:
      return std::to_string(n.value);
    case GenNode::kOp:
      return "(" + full_text(*n.lhs) + " " + n.op + " " + full_text(*n.rhs) + ")";
  }
  return "";
}

struct GenValue {
  bool is_bool = false;
  bool b = false;
  int64_t i = 0;
};

inline GenValue eval_gen(const GenNode& n, const GenEnv& e) {
  switch (n.kind) {
    case GenNode::kBoolVar:
      return {true, n.var == "a" ? e.a : n.var == "b" ? e.b : e.c, 0};
    case GenNode::kBoolLit:
      return {true, n.value != 0, 0};
    case GenNode::kIntVar:
      return {false, false, n.var == "x" ? e.x : n.var == "y" ? e.y : e.z};
    case GenNode::kIntLit:
      return {false, false, n.value};
    case GenNode::kOp:
      break;
  }
  const std::string& op = n.op;
  if (op == "&&") {
    return {true, eval_gen(*n.lhs, e).b ? eval_gen(*n.rhs, e).b : false, 0};
  }
  if (op == "||") {
    return {true, eval_gen(*n.lhs, e).b ? true : eval_gen(*n.rhs, e).b, 0};
  }
  const int64_t l = eval_gen(*n.lhs, e).i;
  const int64_t r = eval_gen(*n.rhs, e).i;
  if (op == "==") return {true, l == r, 0};
  if (op == "!=") return {true, l != r, 0};
  if (op == "<") return {true, l < r, 0};
  if (op == "<=") return {true, l <= r, 0};
  if (op == ">") return {true, l > r, 0};
  if (op == ">=") return {true, l >= r, 0};
  if (op == "+") return {false, false, l + r};
  if (op == "-") return {false, false, l - r};
  if (op == "*") return {false, false, l * r};
  return {false, false, l % r};
}

}  // namespace parasearch::testing

#endif  // PARASEARCH_TESTS_RULE_GEN_H_
