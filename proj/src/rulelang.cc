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

#include <algorithm>
#include <cctype>
#include <climits>
#include <fstream>
#include <set>
#include <sstream>

namespace parasearch {

const char* const kDefaultRulesText =
    "# Flash attention excludes selective recomputation.\n"
    "flash_attn_selective: $use_flash_attn != None && $recompute_granularity == selective\n"
    "# Cannot recompute more layers than there are pipeline stages.\n"
    "recompute_layers: $recompute_num_layers > $pipeline_model_parallel_size\n"
    "# pp * tp must divide the GPU count.\n"
    "gpu_division: $num_gpus % ($pipeline_model_parallel_size * "
    "$tensor_model_parallel_size) != 0\n";

namespace {

constexpr int kMaxDepth = 256;

enum class Tok { kVar, kInt, kIdent, kOp, kLParen, kRParen, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  int64_t int_value = 0;
  BinaryOp op = BinaryOp::kOr;
  int column = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  Lexer(std::string_view text, int line, int column_offset)
      : text_(text), line_(line), offset_(column_offset) {}

  Token next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    Token t;
    t.column = column();
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    if (c == '$') {
      ++pos_;
      if (pos_ >= text_.size() || !ident_start(text_[pos_])) {
        throw RuleSyntaxError(line_, t.column, "expected a variable name after '$'");
      }
      t.kind = Tok::kVar;
      t.text = read_ident();
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      t.kind = Tok::kInt;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        const int digit = text_[pos_] - '0';
        if (t.int_value > (INT64_MAX - digit) / 10) {
          throw RuleSyntaxError(line_, t.column, "integer literal out of range");
        }
        t.int_value = t.int_value * 10 + digit;
        t.text.push_back(text_[pos_++]);
      }
      if (pos_ < text_.size() && ident_char(text_[pos_])) {
        throw RuleSyntaxError(line_, column(), "malformed integer literal");
      }
      return t;
    }
    if (ident_start(c)) {
      t.kind = Tok::kIdent;
      t.text = read_ident();
      return t;
    }
    if (c == '(' || c == ')') {
      t.kind = c == '(' ? Tok::kLParen : Tok::kRParen;
      t.text = std::string(1, c);
      ++pos_;
      return t;
    }
    auto two = [&](const char* s) {
      return pos_ + 1 < text_.size() && text_[pos_] == s[0] && text_[pos_ + 1] == s[1];
    };
    auto emit = [&](BinaryOp op, size_t len) {
      t.kind = Tok::kOp;
      t.op = op;
      t.text = std::string(text_.substr(pos_, len));
      pos_ += len;
      return t;
    };
    if (two("||")) return emit(BinaryOp::kOr, 2);
    if (two("&&")) return emit(BinaryOp::kAnd, 2);
    if (two("==")) return emit(BinaryOp::kEq, 2);
    if (two("!=")) return emit(BinaryOp::kNe, 2);
    if (two("<=")) return emit(BinaryOp::kLe, 2);
    if (two(">=")) return emit(BinaryOp::kGe, 2);
    switch (c) {
      case '<': return emit(BinaryOp::kLt, 1);
      case '>': return emit(BinaryOp::kGt, 1);
      case '+': return emit(BinaryOp::kAdd, 1);
      case '-': return emit(BinaryOp::kSub, 1);
      case '*': return emit(BinaryOp::kMul, 1);
      case '%': return emit(BinaryOp::kMod, 1);
      case '=': throw RuleSyntaxError(line_, t.column, "unknown operator '=' (use '==')");
      default: break;
    }
    // Report the whole UTF-8 sequence so "≠" shows up intact.
    size_t len = 1;
    while (pos_ + len < text_.size() && (static_cast<unsigned char>(text_[pos_ + len]) & 0xC0) == 0x80) {
      ++len;
    }
    throw RuleSyntaxError(line_, t.column,
                          "unknown operator '" + std::string(text_.substr(pos_, len)) + "'");
  }

 private:
  int column() const { return offset_ + static_cast<int>(pos_) + 1; }

  std::string read_ident() {
    const size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string_view text_;
  int line_;
  int offset_;
  size_t pos_ = 0;
};

class Parser {
 public:
  Parser(std::string_view text, int line, int column_offset)
      : lexer_(text, line, column_offset), line_(line) {
    tok_ = lexer_.next();
  }

  ExprPtr parse() {
    ExprPtr e = parse_binary(1, 0);
    if (tok_.kind == Tok::kRParen) {
      throw RuleSyntaxError(line_, tok_.column, "unbalanced ')'");
    }
    if (tok_.kind != Tok::kEnd) {
      throw RuleSyntaxError(line_, tok_.column, "unexpected '" + tok_.text + "'");
    }
    return e;
  }

 private:
  void advance() { tok_ = lexer_.next(); }

  ExprPtr parse_binary(int min_prec, int depth) {
    ExprPtr lhs = parse_primary(depth);
    while (tok_.kind == Tok::kOp && precedence(tok_.op) >= min_prec) {
      const BinaryOp op = tok_.op;
      const int column = tok_.column;
      advance();
      ExprPtr rhs = parse_binary(precedence(op) + 1, depth + 1);
      auto node = std::make_shared<Expr>();
      node->kind = Expr::Kind::kBinary;
      node->op = op;
      node->lhs = std::move(lhs);
      node->rhs = std::move(rhs);
      node->column = column;
      lhs = std::move(node);
    }
    return lhs;
  }

  ExprPtr parse_primary(int depth) {
    if (depth > kMaxDepth) throw RuleSyntaxError(line_, tok_.column, "expression nests too deeply");
    auto node = std::make_shared<Expr>();
    node->column = tok_.column;
    switch (tok_.kind) {
      case Tok::kVar:
        node->kind = Expr::Kind::kVar;
        node->name = tok_.text;
        break;
      case Tok::kInt:
        node->kind = Expr::Kind::kInt;
        node->int_value = tok_.int_value;
        break;
      case Tok::kIdent:
        if (tok_.text == "true" || tok_.text == "false") {
          node->kind = Expr::Kind::kBool;
          node->bool_value = tok_.text == "true";
        } else if (tok_.text == "None") {
          node->kind = Expr::Kind::kNone;
        } else {
          node->kind = Expr::Kind::kSymbol;
          node->name = tok_.text;
        }
        break;
      case Tok::kLParen: {
        const int open_column = tok_.column;
        advance();
        ExprPtr inner = parse_binary(1, depth + 1);
        if (tok_.kind != Tok::kRParen) {
          throw RuleSyntaxError(line_, tok_.kind == Tok::kEnd ? open_column : tok_.column,
                                tok_.kind == Tok::kEnd ? "unbalanced '('"
                                                       : "expected ')' before '" + tok_.text + "'");
        }
        advance();
        return inner;
      }
      case Tok::kRParen:
        throw RuleSyntaxError(line_, tok_.column, "unbalanced ')'");
      case Tok::kOp:
        throw RuleSyntaxError(line_, tok_.column,
                              "expected an operand before '" + tok_.text + "'");
      case Tok::kEnd:
        throw RuleSyntaxError(line_, tok_.column, "unexpected end of expression");
    }
    advance();
    return node;
  }

  Lexer lexer_;
  int line_;
  Token tok_;
};

void render_into(const Expr& e, bool full, std::ostringstream& os) {
  switch (e.kind) {
    case Expr::Kind::kVar: os << '$' << e.name; return;
    case Expr::Kind::kInt: os << e.int_value; return;
    case Expr::Kind::kBool: os << (e.bool_value ? "true" : "false"); return;
    case Expr::Kind::kSymbol: os << e.name; return;
    case Expr::Kind::kNone: os << "None"; return;
    case Expr::Kind::kBinary: break;
  }
  const int p = precedence(e.op);
  auto child = [&](const Expr& c, bool right) {
    bool parens = c.kind == Expr::Kind::kBinary &&
                  (full || precedence(c.op) < p || (right && precedence(c.op) == p));
    if (parens) os << '(';
    render_into(c, full, os);
    if (parens) os << ')';
  };
  child(*e.lhs, false);
  os << ' ' << to_string(e.op) << ' ';
  child(*e.rhs, true);
}

[[noreturn]] void mismatch(const std::string& rule, BinaryOp op, const Value& a, const Value& b) {
  throw RuleEvalError(rule, std::string("type mismatch: ") + to_string(a) + " " + to_string(op) +
                                " " + to_string(b));
}

int64_t as_int(const Value& v, const std::string& rule, BinaryOp op, const Value& other) {
  if (const auto* i = std::get_if<int64_t>(&v)) return *i;
  mismatch(rule, op, v, other);
}

}  // namespace

const char* to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::kOr: return "||";
    case BinaryOp::kAnd: return "&&";
    case BinaryOp::kEq: return "==";
    case BinaryOp::kNe: return "!=";
    case BinaryOp::kLt: return "<";
    case BinaryOp::kLe: return "<=";
    case BinaryOp::kGt: return ">";
    case BinaryOp::kGe: return ">=";
    case BinaryOp::kAdd: return "+";
    case BinaryOp::kSub: return "-";
    case BinaryOp::kMul: return "*";
    case BinaryOp::kMod: return "%";
  }
  return "?";
}

int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::kOr: return 1;
    case BinaryOp::kAnd: return 2;
    case BinaryOp::kEq:
    case BinaryOp::kNe:
    case BinaryOp::kLt:
    case BinaryOp::kLe:
    case BinaryOp::kGt:
    case BinaryOp::kGe: return 3;
    case BinaryOp::kAdd:
    case BinaryOp::kSub: return 4;
    case BinaryOp::kMul:
    case BinaryOp::kMod: return 5;
  }
  return 0;
}

ExprPtr Expr::var(std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kVar;
  e->name = std::move(name);
  return e;
}

ExprPtr Expr::integer(int64_t v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kInt;
  e->int_value = v;
  return e;
}

ExprPtr Expr::boolean(bool v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kBool;
  e->bool_value = v;
  return e;
}

ExprPtr Expr::symbol(std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kSymbol;
  e->name = std::move(name);
  return e;
}

ExprPtr Expr::none() { return std::make_shared<Expr>(); }

ExprPtr Expr::binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kBinary;
  e->op = op;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

bool equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::kVar:
    case Expr::Kind::kSymbol: return a.name == b.name;
    case Expr::Kind::kInt: return a.int_value == b.int_value;
    case Expr::Kind::kBool: return a.bool_value == b.bool_value;
    case Expr::Kind::kNone: return true;
    case Expr::Kind::kBinary:
      return a.op == b.op && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
  }
  return false;
}

std::string render(const Expr& e, bool fully_parenthesized) {
  std::ostringstream os;
  render_into(e, fully_parenthesized, os);
  return os.str();
}

std::string to_string(const Value& v) {
  struct Visitor {
    std::string operator()(const NoneValue&) const { return "None"; }
    std::string operator()(int64_t i) const { return std::to_string(i); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const Symbol& s) const { return s.name; }
  };
  return std::visit(Visitor{}, v);
}

std::optional<Value> MapBindings::lookup(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<Value> StrategyBindings::lookup(std::string_view name) const {
  const ParallelParams& p = s_.params;
  auto opt = [](const std::optional<int64_t>& v) -> Value {
    if (v) return *v;
    return NoneValue{};
  };
  auto moe = [&](int64_t MoeParams::*field) -> Value {
    if (p.moe) return p.moe.value().*field;
    return NoneValue{};
  };
  if (name == "pipeline_model_parallel_size" || name == "pp") return Value(p.pp);
  if (name == "tensor_model_parallel_size" || name == "tp") return Value(p.tp);
  if (name == "data_model_parallel_size" || name == "dp") return Value(p.dp);
  if (name == "micro_batch_size") return Value(p.micro_batch);
  if (name == "num_layers_per_virtual_pipeline_stage") return opt(p.vpp_layers);
  if (name == "sequence_parallel") return Value(p.sequence_parallel);
  if (name == "use_distributed_optimizer") return Value(p.distributed_optimizer);
  if (name == "recompute_granularity") {
    if (p.recompute_granularity == RecomputeGranularity::kNone) return Value(NoneValue{});
    return Value(Symbol{to_string(p.recompute_granularity)});
  }
  if (name == "recompute_method") {
    if (p.recompute_method == RecomputeMethod::kNone) return Value(NoneValue{});
    return Value(Symbol{to_string(p.recompute_method)});
  }
  if (name == "recompute_num_layers") return Value(p.recompute_num_layers);
  if (name == "offload_optimizer") return Value(p.offload_optimizer);
  if (name == "overlap_p2p_communication") return Value(p.overlap_p2p);
  if (name == "tp_comm_overlap") return Value(p.tp_comm_overlap);
  if (name == "overlap_grad_reduce") return Value(p.overlap_grad_reduce);
  if (name == "overlap_param_gather") return Value(p.overlap_param_gather);
  if (name == "use_flash_attn") return Value(p.use_flash_attn);
  if (name == "num_experts") return moe(&MoeParams::num_experts);
  if (name == "expert_model_parallel_size") return moe(&MoeParams::ep_size);
  if (name == "moe_router_topk") return moe(&MoeParams::topk);
  if (name == "num_gpus") return Value(s_.num_gpus());
  if (name == "num_layers") return Value(s_.arch.num_layers);
  if (name == "hidden_size") return Value(s_.arch.hidden_size);
  if (name == "num_attention_heads") return Value(s_.arch.num_heads);
  if (name == "intermediate_size") return Value(s_.arch.intermediate_size);
  if (name == "vocab_size") return Value(s_.arch.vocab_size);
  if (name == "global_batch_size") return Value(train_.global_batch);
  if (name == "seq_length") return Value(train_.seq_len);
  if (name == "num_microbatches") return Value(s_.num_microbatches(train_));
  return std::nullopt;
}

ExprPtr parse_expr(std::string_view text, int line, int column_offset) {
  return Parser(text, line, column_offset).parse();
}

RuleSet parse_rules(std::string_view text) {
  RuleSet rules;
  std::set<std::string> names;
  int line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (const size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }

    std::string name = "rule" + std::to_string(line_no);
    size_t body = 0;
    if (const size_t colon = line.find(':'); colon != std::string_view::npos) {
      std::string_view label = line.substr(0, colon);
      const size_t a = label.find_first_not_of(" \t");
      const size_t b = label.find_last_not_of(" \t");
      label = a == std::string_view::npos ? std::string_view{} : label.substr(a, b - a + 1);
      const bool valid = !label.empty() && ident_start(label[0]) &&
                         std::all_of(label.begin(), label.end(), ident_char);
      if (!valid) {
        throw RuleSyntaxError(line_no, static_cast<int>(colon) + 1,
                              "rule names must be identifiers");
      }
      name = std::string(label);
      body = colon + 1;
    }
    if (!names.insert(name).second) {
      throw RuleSyntaxError(line_no, 1, "duplicate rule name '" + name + "'");
    }
    Rule r;
    r.name = name;
    r.line = line_no;
    r.expr = parse_expr(line.substr(body), line_no, static_cast<int>(body));
    const std::string_view src = line.substr(body);
    const size_t a = src.find_first_not_of(" \t");
    const size_t b = src.find_last_not_of(" \t");
    r.source = std::string(src.substr(a, b - a + 1));
    rules.push_back(std::move(r));
    if (end == text.size()) break;
  }
  return rules;
}

RuleSet load_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("rulelang", "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str());
}

Value evaluate(const Expr& e, const Bindings& env, const std::string& rule) {
  switch (e.kind) {
    case Expr::Kind::kVar: {
      auto v = env.lookup(e.name);
      if (!v) throw RuleEvalError(rule, "unbound variable $" + e.name);
      return *v;
    }
    case Expr::Kind::kInt: return e.int_value;
    case Expr::Kind::kBool: return e.bool_value;
    case Expr::Kind::kSymbol: return Symbol{e.name};
    case Expr::Kind::kNone: return NoneValue{};
    case Expr::Kind::kBinary: break;
  }

  if (e.op == BinaryOp::kAnd || e.op == BinaryOp::kOr) {
    const Value lhs = evaluate(*e.lhs, env, rule);
    const bool* l = std::get_if<bool>(&lhs);
    if (!l) {
      throw RuleEvalError(rule, std::string("operand of '") + to_string(e.op) +
                                    "' is not a boolean: " + to_string(lhs));
    }
    if (e.op == BinaryOp::kAnd && !*l) return false;
    if (e.op == BinaryOp::kOr && *l) return true;
    const Value rhs = evaluate(*e.rhs, env, rule);
    const bool* r = std::get_if<bool>(&rhs);
    if (!r) {
      throw RuleEvalError(rule, std::string("operand of '") + to_string(e.op) +
                                    "' is not a boolean: " + to_string(rhs));
    }
    return *r;
  }

  const Value a = evaluate(*e.lhs, env, rule);
  const Value b = evaluate(*e.rhs, env, rule);
  switch (e.op) {
    case BinaryOp::kEq:
    case BinaryOp::kNe: {
      const bool a_none = std::holds_alternative<NoneValue>(a);
      const bool b_none = std::holds_alternative<NoneValue>(b);
      bool same;
      if (a_none || b_none) {
        same = a_none && b_none;
      } else if (a.index() != b.index()) {
        mismatch(rule, e.op, a, b);
      } else {
        same = a == b;
      }
      return e.op == BinaryOp::kEq ? same : !same;
    }
    case BinaryOp::kLt:
    case BinaryOp::kLe:
    case BinaryOp::kGt:
    case BinaryOp::kGe: {
      const int64_t x = as_int(a, rule, e.op, b);
      const int64_t y = as_int(b, rule, e.op, a);
      if (e.op == BinaryOp::kLt) return x < y;
      if (e.op == BinaryOp::kLe) return x <= y;
      if (e.op == BinaryOp::kGt) return x > y;
      return x >= y;
    }
    case BinaryOp::kAdd:
    case BinaryOp::kSub:
    case BinaryOp::kMul:
    case BinaryOp::kMod: {
      const int64_t x = as_int(a, rule, e.op, b);
      const int64_t y = as_int(b, rule, e.op, a);
      int64_t out = 0;
      bool overflow = false;
      if (e.op == BinaryOp::kAdd) overflow = __builtin_add_overflow(x, y, &out);
      if (e.op == BinaryOp::kSub) overflow = __builtin_sub_overflow(x, y, &out);
      if (e.op == BinaryOp::kMul) overflow = __builtin_mul_overflow(x, y, &out);
      if (e.op == BinaryOp::kMod) {
        if (y == 0) throw RuleEvalError(rule, "modulo by zero");
        if (x == INT64_MIN && y == -1) {
          overflow = true;
        } else {
          out = x % y;
        }
      }
      if (overflow) {
        throw RuleEvalError(rule, "integer overflow in " + to_string(a) + " " + to_string(e.op) +
                                      " " + to_string(b));
      }
      return out;
    }
    default: break;
  }
  throw RuleEvalError(rule, "unhandled operator");
}

bool eval_rule(const Rule& rule, const Bindings& env) {
  const Value v = evaluate(*rule.expr, env, rule.name);
  if (const bool* b = std::get_if<bool>(&v)) return *b;
  throw RuleEvalError(rule.name, "rule does not evaluate to a boolean (got " + to_string(v) + ")");
}

bool eval_rule(const Rule& rule, const Strategy& s, const TrainConfig& train) {
  return eval_rule(rule, StrategyBindings(s, train));
}

std::optional<size_t> first_matching_rule(const RuleSet& rules, const Strategy& s,
                                          const TrainConfig& train) {
  const StrategyBindings env(s, train);
  for (size_t i = 0; i < rules.size(); ++i) {
    try {
      if (eval_rule(rules[i], env)) return i;
    } catch (const RuleEvalError& e) {
      throw RuleEvalError(e.rule(), e.detail() + " [strategy " + s.id + "]");
    }
  }
  return std::nullopt;
}

RuleFilterResult filter_by_rules(std::vector<Strategy> strategies, const RuleSet& rules,
                                 const TrainConfig& train) {
  RuleFilterResult out;
  out.drops.assign(rules.size(), 0);
  for (auto& s : strategies) {
    if (auto hit = first_matching_rule(rules, s, train)) {
      ++out.drops[*hit];
    } else {
      out.kept.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace parasearch
