#include "execopt/ground.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "execopt/errors.hpp"

namespace execopt::ground {

using expr::BinaryOp;
using expr::Expr;
using expr::NodeKind;
using Scope = std::vector<std::pair<std::string, long long>>;

Program Program::affine(std::vector<AffineTerm> terms, double constant) {
  Program p;
  p.affine_ = true;
  p.terms_ = std::move(terms);
  p.constant_ = constant;
  return p;
}

Program Program::postfix(std::vector<Instr> code) {
  Program p;
  p.affine_ = false;
  p.code_ = std::move(code);
  return p;
}

double Program::evaluate(std::span<const double> x) const {
  if (affine_) {
    double total = constant_;
    for (const auto& t : terms_) total += t.coeff * x[t.slot];
    return total;
  }
  double stack[64];
  std::vector<double> heap;
  double* s = stack;
  if (code_.size() > 64) {
    heap.resize(code_.size());
    s = heap.data();
  }
  std::size_t top = 0;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::Const: s[top++] = in.value; break;
      case Op::Var: s[top++] = x[in.slot]; break;
      case Op::Neg: s[top - 1] = -s[top - 1]; break;
      case Op::Add: --top; s[top - 1] += s[top]; break;
      case Op::Sub: --top; s[top - 1] -= s[top]; break;
      case Op::Mul: --top; s[top - 1] *= s[top]; break;
      case Op::Div:
        --top;
        if (s[top] == 0.0) return std::numeric_limits<double>::quiet_NaN();
        s[top - 1] /= s[top];
        break;
    }
  }
  return s[0];
}

bool Model::feasible(std::span<const double> x) const {
  if (trivially_infeasible) return false;
  for (const auto& c : comparisons) {
    const double lhs = c.lhs.evaluate(x);
    const double rhs = c.rhs.evaluate(x);
    if (std::isnan(lhs) || std::isnan(rhs)) return false;
    if (!expr::comparison_holds(c.op, lhs, rhs)) return false;
  }
  return true;
}

namespace {

// Symbolic value during grounding: affine when possible, else a tree.
struct Tree;
using TreePtr = std::shared_ptr<const Tree>;

struct Sym {
  bool affine = true;
  std::map<std::uint32_t, double> coeffs;
  double constant = 0.0;
  TreePtr tree;

  bool is_constant() const { return affine && coeffs.empty(); }
};

struct Tree {
  Program::Op op;
  std::uint32_t slot = 0;
  double value = 0.0;
  TreePtr lhs, rhs;
};

TreePtr to_tree(const Sym& s) {
  if (!s.affine) return s.tree;
  TreePtr acc = std::make_shared<Tree>(Tree{Program::Op::Const, 0, s.constant, nullptr, nullptr});
  for (const auto& [slot, coeff] : s.coeffs) {
    auto var = std::make_shared<Tree>(Tree{Program::Op::Var, slot, 0.0, nullptr, nullptr});
    auto c = std::make_shared<Tree>(Tree{Program::Op::Const, 0, coeff, nullptr, nullptr});
    auto term = std::make_shared<Tree>(Tree{Program::Op::Mul, 0, 0.0, c, var});
    acc = std::make_shared<Tree>(Tree{Program::Op::Add, 0, 0.0, acc, term});
  }
  return acc;
}

Sym make_tree(Program::Op op, const Sym& a, const Sym& b) {
  Sym out;
  out.affine = false;
  out.tree = std::make_shared<Tree>(Tree{op, 0, 0.0, to_tree(a), to_tree(b)});
  return out;
}

Sym constant(double v) {
  Sym s;
  s.constant = v;
  return s;
}

Sym scale(Sym s, double k) {
  if (!s.affine) {
    return make_tree(Program::Op::Mul, constant(k), s);
  }
  s.constant *= k;
  for (auto& [slot, c] : s.coeffs) c *= k;
  return s;
}

Sym add(Sym a, const Sym& b, double sign) {
  if (!a.affine || !b.affine) {
    return make_tree(sign > 0 ? Program::Op::Add : Program::Op::Sub, a, b);
  }
  a.constant += sign * b.constant;
  for (const auto& [slot, c] : b.coeffs) a.coeffs[slot] += sign * c;
  return a;
}

class Grounder {
 public:
  Grounder(const expr::Environment& env, const std::vector<std::string>& free_slots,
           const std::map<std::string, double>& fixed)
      : env_(env), fixed_(fixed) {
    for (std::uint32_t i = 0; i < free_slots.size(); ++i) slots_.emplace(free_slots[i], i);
  }

  Sym build(const Expr& e, Scope& scope) {
    switch (e.kind) {
      case NodeKind::Number:
        return constant(e.number);
      case NodeKind::Identifier: {
        for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
          if (it->first == e.name) return constant(static_cast<double>(it->second));
        }
        if (env_.inputs.count(e.name)) return constant(expr::eval_arith_scoped(e, env_, scope));
        return variable(e.name);
      }
      case NodeKind::Index: {
        if (env_.inputs.count(e.name)) return constant(expr::eval_arith_scoped(e, env_, scope));
        std::vector<long long> idx;
        for (const auto& sub : e.children) {
          const Sym s = build(sub, scope);
          if (!s.is_constant() || std::floor(s.constant) != s.constant) {
            throw EvaluationError("subscripts of '" + e.name + "' must be integral constants");
          }
          idx.push_back(static_cast<long long>(s.constant));
        }
        return variable(variable_key(e.name, idx));
      }
      case NodeKind::Binary: {
        Sym lhs = build(e.children[0], scope);
        Sym rhs = build(e.children[1], scope);
        switch (e.binary_op) {
          case BinaryOp::Add: return add(std::move(lhs), rhs, 1.0);
          case BinaryOp::Sub: return add(std::move(lhs), rhs, -1.0);
          case BinaryOp::Mul:
            if (lhs.is_constant()) return scale(std::move(rhs), lhs.constant);
            if (rhs.is_constant()) return scale(std::move(lhs), rhs.constant);
            return make_tree(Program::Op::Mul, lhs, rhs);
          case BinaryOp::Div:
            if (rhs.is_constant()) {
              if (rhs.constant == 0.0) {
                throw DivisionByZero("division by zero in '" + expr::to_string(e) + "'");
              }
              if (lhs.is_constant()) return constant(lhs.constant / rhs.constant);
              return make_tree(Program::Op::Div, lhs, rhs);
            }
            return make_tree(Program::Op::Div, lhs, rhs);
        }
        break;
      }
      case NodeKind::Negate: {
        Sym inner = build(e.children[0], scope);
        if (!inner.affine) {
          Sym out;
          out.affine = false;
          out.tree = std::make_shared<Tree>(Tree{Program::Op::Neg, 0, 0.0, to_tree(inner), nullptr});
          return out;
        }
        return scale(std::move(inner), -1.0);
      }
      case NodeKind::Sum: {
        Sym total;
        expr::for_each_binding(e.generators, e.filter, env_, scope,
                               [&](Scope& s) { total = add(std::move(total), build(e.children[0], s), 1.0); });
        return total;
      }
      default:
        break;
    }
    throw EvaluationError("comparison used where a number is expected: '" + expr::to_string(e) + "'");
  }

 private:
  Sym variable(const std::string& key) {
    if (auto it = slots_.find(key); it != slots_.end()) {
      Sym s;
      s.coeffs[it->second] = 1.0;
      return s;
    }
    if (auto it = fixed_.find(key); it != fixed_.end()) return constant(it->second);
    throw MissingVariable("variable '" + key + "' has no domain");
  }

  const expr::Environment& env_;
  const std::map<std::string, double>& fixed_;
  std::map<std::string, std::uint32_t> slots_;
};

void emit(const TreePtr& t, std::vector<Program::Instr>& code) {
  if (t->lhs) emit(t->lhs, code);
  if (t->rhs) emit(t->rhs, code);
  code.push_back({t->op, t->slot, t->value});
}

Program compile(const Sym& s) {
  if (s.affine) {
    std::vector<AffineTerm> terms;
    for (const auto& [slot, c] : s.coeffs) {
      if (c != 0.0) terms.push_back({slot, c});
    }
    return Program::affine(std::move(terms), s.constant);
  }
  std::vector<Program::Instr> code;
  emit(s.tree, code);
  return Program::postfix(std::move(code));
}

}  // namespace

Model ground_process(const DecisionProcess& p, const expr::Environment& env,
                     const std::vector<std::string>& free_slots,
                     const std::map<std::string, double>& fixed) {
  Model model;
  model.slot_names = free_slots;
  Grounder g(env, free_slots, fixed);
  Scope scope;
  model.objective = compile(g.build(expr::parse_expr(p.objective_function.expression), scope));

  for (std::size_t ci = 0; ci < p.constraints.size(); ++ci) {
    const Expr c = expr::parse_expr(p.constraints[ci].expression);
    auto add_comparison = [&](const Expr& cmp, Scope& s) {
      Comparison gc;
      gc.lhs = compile(g.build(cmp.children[0], s));
      gc.rhs = compile(g.build(cmp.children[1], s));
      gc.op = cmp.compare_op;
      gc.constraint_index = ci;
      if (gc.lhs.is_constant() && gc.rhs.is_constant()) {
        if (!expr::comparison_holds(gc.op, gc.lhs.constant(), gc.rhs.constant())) {
          model.trivially_infeasible = true;
        }
        return;
      }
      model.comparisons.push_back(std::move(gc));
    };
    if (c.kind == NodeKind::Compare) {
      add_comparison(c, scope);
    } else {
      expr::for_each_binding(c.generators, c.filter, env, scope,
                             [&](Scope& s) { add_comparison(c.children[0], s); });
    }
  }
  return model;
}

}  // namespace execopt::ground
