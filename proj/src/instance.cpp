#include "execopt/instance.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "execopt/errors.hpp"

namespace execopt {

namespace {

using Scope = std::vector<std::pair<std::string, long long>>;

void collect(const expr::Expr& e, const expr::Environment& env, Scope& scope,
             std::set<std::string>& keys) {
  using expr::NodeKind;
  switch (e.kind) {
    case NodeKind::Identifier: {
      for (const auto& [name, value] : scope) {
        if (name == e.name) return;
      }
      if (!env.inputs.count(e.name)) keys.insert(e.name);
      return;
    }
    case NodeKind::Index: {
      if (env.inputs.count(e.name)) return;
      std::vector<long long> idx;
      for (const auto& sub : e.children) {
        const double v = expr::eval_arith_scoped(sub, env, scope);
        if (v != static_cast<double>(static_cast<long long>(v))) {
          throw EvaluationError("subscript of '" + e.name + "' is not integral");
        }
        idx.push_back(static_cast<long long>(v));
      }
      keys.insert(variable_key(e.name, idx));
      return;
    }
    case NodeKind::Sum:
    case NodeKind::ForAll:
      expr::for_each_binding(e.generators, e.filter, env, scope, [&](Scope& s) {
        for (const auto& c : e.children) collect(c, env, s, keys);
      });
      return;
    default:
      for (const auto& c : e.children) collect(c, env, scope, keys);
      return;
  }
}

}  // namespace

std::pair<std::string, std::vector<long long>> split_variable_key(std::string_view key) {
  const auto open = key.find('[');
  if (open == std::string_view::npos) return {std::string(key), {}};
  std::vector<long long> idx;
  std::size_t pos = open + 1;
  while (pos < key.size() && key[pos] != ']') {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(key.data() + pos, key.data() + key.size(), v);
    if (ec != std::errc()) throw SchemaViolation("malformed variable key '" + std::string(key) + "'");
    idx.push_back(v);
    pos = static_cast<std::size_t>(ptr - key.data());
    if (pos < key.size() && key[pos] == ',') ++pos;
  }
  return {std::string(key.substr(0, open)), idx};
}

Instance instantiate(const DecisionProcess& p, const IndexSets& index_sets) {
  Instance inst;
  for (const auto& in : p.inputs) inst.env.inputs.emplace(in.name, in.value);
  for (const auto& [name, members] : index_sets) inst.env.index_sets.emplace(name, members);

  inst.objective = expr::parse_expr(p.objective_function.expression);
  for (const auto& c : p.constraints) inst.constraints.push_back(expr::parse_expr(c.expression));

  std::vector<expr::Expr> all = inst.constraints;
  all.push_back(inst.objective);
  for (auto& [name, members] : expr::infer_index_sets(all, inst.env)) {
    inst.env.index_sets.emplace(name, std::move(members));
  }

  std::set<std::string> keys;
  Scope scope;
  for (const auto& e : all) collect(e, inst.env, scope, keys);

  std::map<std::string, std::size_t> decl;
  for (std::size_t i = 0; i < p.decision_variables.size(); ++i) {
    decl.emplace(p.decision_variables[i].base_name(), i);
  }
  std::vector<std::pair<std::pair<std::size_t, std::vector<long long>>, std::string>> order;
  for (const auto& k : keys) {
    auto [base, idx] = split_variable_key(k);
    auto it = decl.find(base);
    if (it == decl.end()) throw UndeclaredSymbol(base);
    order.push_back({{it->second, std::move(idx)}, k});
  }
  std::sort(order.begin(), order.end());
  for (auto& [rank, key] : order) inst.variables.push_back(std::move(key));
  return inst;
}

}  // namespace execopt
