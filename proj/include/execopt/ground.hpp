#pragma once

// Grounding: expands generators and input lookups of a DecisionProcess into
// flat arithmetic over numbered variable slots, so a candidate point can be
// scored without walking the expression tree or doing map lookups. Affine
// expressions collapse to sparse coefficient lists; anything else becomes a
// small postfix program.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "execopt/decision_model.hpp"
#include "execopt/expr.hpp"

namespace execopt::ground {

struct AffineTerm {
  std::uint32_t slot;
  double coeff;
};

class Program {
 public:
  enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Neg };
  struct Instr {
    Op op;
    std::uint32_t slot = 0;
    double value = 0.0;
  };

  static Program affine(std::vector<AffineTerm> terms, double constant);
  static Program postfix(std::vector<Instr> code);

  bool is_affine() const { return affine_; }
  bool is_constant() const { return affine_ && terms_.empty(); }
  double constant() const { return constant_; }
  const std::vector<AffineTerm>& terms() const { return terms_; }

  // Returns NaN when a division by zero is hit.
  double evaluate(std::span<const double> x) const;

 private:
  bool affine_ = true;
  std::vector<AffineTerm> terms_;
  double constant_ = 0.0;
  std::vector<Instr> code_;
};

struct Comparison {
  Program lhs;
  Program rhs;
  expr::CompareOp op = expr::CompareOp::Le;
  std::size_t constraint_index = 0;
};

struct Model {
  std::vector<std::string> slot_names;
  Program objective;
  // Comparisons whose truth does not depend on any slot are resolved at
  // grounding time: satisfied ones are dropped, a violated one sets
  // `trivially_infeasible`.
  std::vector<Comparison> comparisons;
  bool trivially_infeasible = false;

  // True when every comparison holds (same slack rules as the evaluator).
  bool feasible(std::span<const double> x) const;
};

// `free_slots` name the variables that vary; `fixed` supplies constants for
// the remaining instantiated variables. Referencing a variable in neither
// throws MissingVariable.
Model ground_process(const DecisionProcess& p, const expr::Environment& env,
                     const std::vector<std::string>& free_slots,
                     const std::map<std::string, double>& fixed);

}  // namespace execopt::ground
