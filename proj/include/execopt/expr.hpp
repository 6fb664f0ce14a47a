#pragma once

// Expression language for objectives and constraints.
//
// The grammar covers the Python-style comprehension expressions that appear
// in extracted formulations (see docs/grammar.md):
//
//   forall   := expr "for all" binders [("if" | "with") cond]
//             | expr ("for" ident "in" ident)+ [("if" | "with") cond]
//   binders  := ident ("," ident)* "in" ident ("," binders | "for" binders)*
//   expr     := arith [cmp-op arith]
//   arith    := term (("+" | "-") term)*
//   term     := factor (("*" | "/") factor)*
//   factor   := "-" factor | number | sum | index | ident | "(" arith ")"
//   sum      := "sum" "(" arith gen-list [("if" | "with") cond] ")"
//   index    := ident ("[" arith ("," arith)* "]")+
//   cond     := arith cmp-op arith ("and" arith cmp-op arith)*
//
// Chained subscripts c[i][j] are normalized to tuple form c[i, j]. Array
// inputs are indexed 1-based by index values.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "execopt/decision_model.hpp"

namespace execopt::expr {

enum class NodeKind { Number, Identifier, Index, Binary, Negate, Compare, And, Sum, ForAll };
enum class BinaryOp { Add, Sub, Mul, Div };
enum class CompareOp { Le, Ge, Eq, Lt, Gt, Ne };

std::string_view to_string(BinaryOp op);
std::string_view to_string(CompareOp op);

struct Generator {
  std::vector<std::string> vars;  // "i, j in regions" binds both over regions
  std::string set;
  bool operator==(const Generator&) const = default;
};

// Value-semantic expression tree.
//   Index:    name = base, children = subscripts
//   Binary:   children = {lhs, rhs}
//   Negate:   children = {operand}
//   Compare:  children = {lhs, rhs}
//   And:      children = comparisons
//   Sum:      children = {body}, generators, filter (0 or 1 element)
//   ForAll:   children = {comparison}, generators, filter
struct Expr {
  NodeKind kind = NodeKind::Number;
  double number = 0.0;
  std::string name;
  BinaryOp binary_op = BinaryOp::Add;
  CompareOp compare_op = CompareOp::Le;
  std::vector<Expr> children;
  std::vector<Generator> generators;
  std::vector<Expr> filter;

  bool operator==(const Expr&) const = default;

  static Expr make_number(double v);
  static Expr make_identifier(std::string name);
  static Expr make_binary(BinaryOp op, Expr lhs, Expr rhs);
  static Expr make_compare(CompareOp op, Expr lhs, Expr rhs);
};

Expr parse_expr(std::string_view text);

// Canonical text; parse(to_string(parse(s))) == parse(s).
std::string to_string(const Expr& e);

bool is_comparison_free(const Expr& e);
bool is_constraint(const Expr& e);  // Compare or ForAll at top level

// Identifiers referenced by the expression that are not bound by one of
// its generators. Index-set names in generator position are reported in
// `index_sets`, not in `identifiers`.
struct FreeSymbols {
  std::vector<std::string> identifiers;
  std::vector<std::string> index_sets;
};
FreeSymbols free_symbols(const Expr& e);

struct Environment {
  std::map<std::string, NumericArray, std::less<>> inputs;
  std::map<std::string, double, std::less<>> assignment;
  std::map<std::string, std::vector<long long>, std::less<>> index_sets;
};

// Index-set members: explicit binding, else a 1-D integral input of that
// name, else 1..n for a scalar integral input n.
std::vector<long long> resolve_index_set(const Environment& env, std::string_view set);

// Derives 1..n ranges for index sets that are never declared explicitly
// from the extents of the input arrays their variables subscript.
std::map<std::string, std::vector<long long>, std::less<>> infer_index_sets(
    const std::vector<Expr>& expressions, const Environment& env);

inline constexpr double kFeasibilitySlack = 1e-9;

// ≤ and ≥ admit kFeasibilitySlack; == requires |lhs − rhs| ≤ slack; strict
// comparisons and != are exact.
bool comparison_holds(CompareOp op, double lhs, double rhs);

double eval_arith(const Expr& e, const Environment& env);

struct Violation {
  std::vector<std::pair<std::string, long long>> bindings;
  double lhs = 0.0;
  double rhs = 0.0;
  CompareOp op = CompareOp::Le;
  bool operator==(const Violation&) const = default;
};

std::vector<Violation> eval_constraint(const Expr& c, const Environment& env);

// Calls `visit(bindings)` for every generator instantiation that passes the
// filter, in left-to-right generator order.
template <typename Visit>
void for_each_binding(const std::vector<Generator>& generators, const std::vector<Expr>& filter,
                      const Environment& env,
                      std::vector<std::pair<std::string, long long>>& scope, Visit&& visit);

// Evaluates a filter condition under bound index variables.
bool eval_condition(const Expr& cond, const Environment& env,
                    std::vector<std::pair<std::string, long long>>& scope);

double eval_arith_scoped(const Expr& e, const Environment& env,
                         std::vector<std::pair<std::string, long long>>& scope);

// Flattens generators into (var, set) pairs.
std::vector<std::pair<std::string, std::string>> flatten_generators(
    const std::vector<Generator>& generators);

template <typename Visit>
void for_each_binding(const std::vector<Generator>& generators, const std::vector<Expr>& filter,
                      const Environment& env,
                      std::vector<std::pair<std::string, long long>>& scope, Visit&& visit) {
  const auto flat = flatten_generators(generators);
  std::vector<std::vector<long long>> domains;
  domains.reserve(flat.size());
  for (const auto& [var, set] : flat) domains.push_back(resolve_index_set(env, set));

  const std::size_t base = scope.size();
  for (const auto& [var, set] : flat) scope.emplace_back(var, 0);

  auto recurse = [&](auto&& self, std::size_t depth) -> void {
    if (depth == flat.size()) {
      if (filter.empty() || eval_condition(filter.front(), env, scope)) visit(scope);
      return;
    }
    for (long long v : domains[depth]) {
      scope[base + depth].second = v;
      self(self, depth + 1);
    }
  };
  recurse(recurse, 0);
  scope.resize(base);
}

}  // namespace execopt::expr
