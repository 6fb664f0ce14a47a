#pragma once

// A DecisionProcess bound to its data: parsed expressions, the evaluation
// environment with every index set resolved, and the list of instantiated
// variable keys.

#include <map>
#include <string>
#include <vector>

#include "execopt/decision_model.hpp"
#include "execopt/expr.hpp"

namespace execopt {

using IndexSets = std::map<std::string, std::vector<long long>, std::less<>>;

struct Instance {
  expr::Environment env;  // inputs and index sets; assignment left empty
  expr::Expr objective;
  std::vector<expr::Expr> constraints;
  // Every variable key referenced by the objective or a constraint, ordered
  // by declaration of the base name, then by index tuple.
  std::vector<std::string> variables;
};

// `index_sets` takes precedence over inference from input extents.
Instance instantiate(const DecisionProcess& p, const IndexSets& index_sets = {});

// Splits "x[3,6]" into ("x", {3, 6}); "a" into ("a", {}).
std::pair<std::string, std::vector<long long>> split_variable_key(std::string_view key);

}  // namespace execopt
