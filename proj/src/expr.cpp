#include "execopt/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "execopt/errors.hpp"

namespace execopt {

namespace {
std::string join_expected(const std::vector<std::string>& expected) {
  std::string out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) out += ", ";
    out += expected[i];
  }
  return out;
}
}  // namespace

SyntaxError::SyntaxError(std::size_t offset, std::vector<std::string> expected,
                         const std::string& detail)
    : Error("SyntaxError", "syntax error at offset " + std::to_string(offset) + ": " + detail +
                               (expected.empty() ? "" : " (expected " + join_expected(expected) + ")")),
      offset_(offset),
      expected_(std::move(expected)) {}

}  // namespace execopt

namespace execopt::expr {

std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
  }
  return "?";
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Le: return "<=";
    case CompareOp::Ge: return ">=";
    case CompareOp::Eq: return "==";
    case CompareOp::Lt: return "<";
    case CompareOp::Gt: return ">";
    case CompareOp::Ne: return "!=";
  }
  return "?";
}

Expr Expr::make_number(double v) {
  Expr e;
  e.kind = NodeKind::Number;
  e.number = v;
  return e;
}

Expr Expr::make_identifier(std::string name) {
  Expr e;
  e.kind = NodeKind::Identifier;
  e.name = std::move(name);
  return e;
}

Expr Expr::make_binary(BinaryOp op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = NodeKind::Binary;
  e.binary_op = op;
  e.children.push_back(std::move(lhs));
  e.children.push_back(std::move(rhs));
  return e;
}

Expr Expr::make_compare(CompareOp op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = NodeKind::Compare;
  e.compare_op = op;
  e.children.push_back(std::move(lhs));
  e.children.push_back(std::move(rhs));
  return e;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Number, Ident, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  std::size_t offset = 0;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.')) ++i;
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
          i = j;
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
        }
      }
      Token t{Tok::Number, std::string(src.substr(start, i - start)), 0.0, start};
      const auto* first = t.text.data();
      const auto* last = first + t.text.size();
      auto [ptr, ec] = std::from_chars(first, last, t.number);
      if (ec != std::errc() || ptr != last) {
        throw SyntaxError(start, {"number"}, "malformed number '" + t.text + "'");
      }
      out.push_back(std::move(t));
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
        ++i;
      }
      out.push_back({Tok::Ident, std::string(src.substr(start, i - start)), 0.0, start});
      continue;
    }
    if (i + 1 < src.size()) {
      const std::string_view two = src.substr(i, 2);
      if (two == "<=" || two == ">=" || two == "==" || two == "!=") {
        out.push_back({Tok::Punct, std::string(two), 0.0, start});
        i += 2;
        continue;
      }
    }
    if (std::string_view("+-*/()[],<>").find(c) != std::string_view::npos) {
      out.push_back({Tok::Punct, std::string(1, c), 0.0, start});
      ++i;
      continue;
    }
    throw SyntaxError(start, {}, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", 0.0, src.size()});
  return out;
}

bool is_keyword(std::string_view word) {
  return word == "for" || word == "in" || word == "if" || word == "with" || word == "all" ||
         word == "and" || word == "sum";
}

const std::vector<std::string> kFactorStart = {"number", "identifier", "sum", "(", "-"};

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(tokenize(src)) {}

  Expr parse_top() {
    Expr e = parse_expr();
    if (peek_word("for")) {
      Expr q;
      q.kind = NodeKind::ForAll;
      const std::size_t at = peek().offset;
      if (e.kind != NodeKind::Compare) {
        throw SyntaxError(at, {}, "quantified expression must be a comparison");
      }
      q.children.push_back(std::move(e));
      parse_quantifier(q.generators);
      if (peek_word("if") || peek_word("with")) {
        advance();
        q.filter.push_back(parse_condition());
      }
      e = std::move(q);
    }
    if (peek().kind != Tok::End) {
      throw SyntaxError(peek().offset, {"end of input"}, "unexpected '" + peek().text + "'");
    }
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
  bool peek_punct(std::string_view p) const { return peek().kind == Tok::Punct && peek().text == p; }
  bool peek_word(std::string_view w) const { return peek().kind == Tok::Ident && peek().text == w; }

  void expect_punct(std::string_view p) {
    if (!peek_punct(p)) {
      throw SyntaxError(peek().offset, {std::string(p)},
                        peek().kind == Tok::End ? "unexpected end of input"
                                                : "unexpected '" + peek().text + "'");
    }
    advance();
  }
  void expect_word(std::string_view w) {
    if (!peek_word(w)) {
      throw SyntaxError(peek().offset, {std::string(w)},
                        peek().kind == Tok::End ? "unexpected end of input"
                                                : "unexpected '" + peek().text + "'");
    }
    advance();
  }
  std::string expect_name() {
    if (peek().kind != Tok::Ident || is_keyword(peek().text)) {
      throw SyntaxError(peek().offset, {"identifier"},
                        peek().kind == Tok::End ? "unexpected end of input"
                                                : "unexpected '" + peek().text + "'");
    }
    return advance().text;
  }

  std::optional<CompareOp> peek_compare() const {
    if (peek().kind != Tok::Punct) return std::nullopt;
    const auto& t = peek().text;
    if (t == "<=") return CompareOp::Le;
    if (t == ">=") return CompareOp::Ge;
    if (t == "==") return CompareOp::Eq;
    if (t == "<") return CompareOp::Lt;
    if (t == ">") return CompareOp::Gt;
    if (t == "!=") return CompareOp::Ne;
    return std::nullopt;
  }

  Expr parse_expr() {
    Expr lhs = parse_arith();
    if (auto op = peek_compare()) {
      if (*op == CompareOp::Ne) {
        throw SyntaxError(peek().offset, {"<=", ">=", "==", "<", ">"},
                          "'!=' is only allowed in generator filters");
      }
      advance();
      Expr rhs = parse_arith();
      return Expr::make_compare(*op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Expr parse_comparison() {
    Expr lhs = parse_arith();
    auto op = peek_compare();
    if (!op) {
      throw SyntaxError(peek().offset, {"<=", ">=", "==", "!=", "<", ">"}, "expected comparison");
    }
    advance();
    Expr rhs = parse_arith();
    return Expr::make_compare(*op, std::move(lhs), std::move(rhs));
  }

  Expr parse_condition() {
    Expr first = parse_comparison();
    if (!peek_word("and")) return first;
    Expr all;
    all.kind = NodeKind::And;
    all.children.push_back(std::move(first));
    while (peek_word("and")) {
      advance();
      all.children.push_back(parse_comparison());
    }
    return all;
  }

  Expr parse_arith() {
    Expr lhs = parse_term();
    while (peek_punct("+") || peek_punct("-")) {
      const BinaryOp op = advance().text == "+" ? BinaryOp::Add : BinaryOp::Sub;
      lhs = Expr::make_binary(op, std::move(lhs), parse_term());
    }
    return lhs;
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    while (peek_punct("*") || peek_punct("/")) {
      const BinaryOp op = advance().text == "*" ? BinaryOp::Mul : BinaryOp::Div;
      lhs = Expr::make_binary(op, std::move(lhs), parse_factor());
    }
    return lhs;
  }

  Expr parse_factor() {
    const Token& t = peek();
    if (t.kind == Tok::Punct && t.text == "-") {
      advance();
      Expr e;
      e.kind = NodeKind::Negate;
      e.children.push_back(parse_factor());
      return e;
    }
    if (t.kind == Tok::Number) {
      advance();
      return Expr::make_number(t.number);
    }
    if (t.kind == Tok::Punct && t.text == "(") {
      advance();
      Expr inner = parse_arith();
      expect_punct(")");
      return inner;
    }
    if (t.kind == Tok::Ident && t.text == "sum") {
      return parse_sum();
    }
    if (t.kind == Tok::Ident && !is_keyword(t.text)) {
      std::string name = advance().text;
      if (!peek_punct("[")) return Expr::make_identifier(std::move(name));
      Expr e;
      e.kind = NodeKind::Index;
      e.name = std::move(name);
      while (peek_punct("[")) {
        advance();
        e.children.push_back(parse_arith());
        while (peek_punct(",")) {
          advance();
          e.children.push_back(parse_arith());
        }
        expect_punct("]");
      }
      return e;
    }
    throw SyntaxError(t.offset, kFactorStart,
                      t.kind == Tok::End ? "unexpected end of input" : "unexpected '" + t.text + "'");
  }

  Expr parse_sum() {
    expect_word("sum");
    expect_punct("(");
    Expr e;
    e.kind = NodeKind::Sum;
    e.children.push_back(parse_arith());
    if (!peek_word("for")) {
      throw SyntaxError(peek().offset, {"for"}, "sum requires a generator");
    }
    while (peek_word("for")) {
      advance();
      parse_binder_group(e.generators);
    }
    if (peek_word("if") || peek_word("with")) {
      advance();
      e.filter.push_back(parse_condition());
    }
    expect_punct(")");
    return e;
  }

  // ident ("," ident)* "in" ident
  void parse_binder_group(std::vector<Generator>& out) {
    Generator g;
    g.vars.push_back(expect_name());
    while (peek_punct(",")) {
      advance();
      g.vars.push_back(expect_name());
    }
    expect_word("in");
    g.set = expect_name();
    out.push_back(std::move(g));
  }

  void parse_quantifier(std::vector<Generator>& out) {
    expect_word("for");
    const bool universal = peek_word("all");
    if (universal) advance();
    parse_binder_group(out);
    while (true) {
      if (peek_word("for")) {
        advance();
        if (peek_word("all")) advance();
        parse_binder_group(out);
      } else if (universal && peek_punct(",")) {
        advance();
        parse_binder_group(out);
      } else {
        break;
      }
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Printer

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

int precedence(const Expr& e) {
  switch (e.kind) {
    case NodeKind::Binary:
      return (e.binary_op == BinaryOp::Add || e.binary_op == BinaryOp::Sub) ? 1 : 2;
    case NodeKind::Negate: return 3;
    default: return 4;
  }
}

void print(const Expr& e, std::string& out);

void print_with_parens(const Expr& e, bool parens, std::string& out) {
  if (parens) out += '(';
  print(e, out);
  if (parens) out += ')';
}

void print_generators(const std::vector<Generator>& gens, std::string& out, bool universal) {
  for (std::size_t g = 0; g < gens.size(); ++g) {
    if (universal) {
      out += g == 0 ? " for all " : ", ";
    } else {
      out += " for ";
    }
    for (std::size_t v = 0; v < gens[g].vars.size(); ++v) {
      if (v) out += ", ";
      out += gens[g].vars[v];
    }
    out += " in ";
    out += gens[g].set;
  }
}

void print(const Expr& e, std::string& out) {
  switch (e.kind) {
    case NodeKind::Number:
      out += format_number(e.number);
      return;
    case NodeKind::Identifier:
      out += e.name;
      return;
    case NodeKind::Index:
      out += e.name;
      out += '[';
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) out += ", ";
        print(e.children[i], out);
      }
      out += ']';
      return;
    case NodeKind::Binary: {
      const int p = precedence(e);
      print_with_parens(e.children[0], precedence(e.children[0]) < p, out);
      out += ' ';
      out += to_string(e.binary_op);
      out += ' ';
      print_with_parens(e.children[1], precedence(e.children[1]) <= p, out);
      return;
    }
    case NodeKind::Negate:
      out += '-';
      print_with_parens(e.children[0], precedence(e.children[0]) < 3, out);
      return;
    case NodeKind::Compare:
      print(e.children[0], out);
      out += ' ';
      out += to_string(e.compare_op);
      out += ' ';
      print(e.children[1], out);
      return;
    case NodeKind::And:
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) out += " and ";
        print(e.children[i], out);
      }
      return;
    case NodeKind::Sum:
      out += "sum(";
      print(e.children[0], out);
      print_generators(e.generators, out, false);
      if (!e.filter.empty()) {
        out += " if ";
        print(e.filter[0], out);
      }
      out += ')';
      return;
    case NodeKind::ForAll:
      print(e.children[0], out);
      print_generators(e.generators, out, true);
      if (!e.filter.empty()) {
        out += " if ";
        print(e.filter[0], out);
      }
      return;
  }
}

}  // namespace

Expr parse_expr(std::string_view text) {
  bool blank = std::all_of(text.begin(), text.end(),
                           [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (blank) throw SyntaxError(text.size(), kFactorStart, "empty expression");
  Parser parser(text);
  return parser.parse_top();
}

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

bool is_comparison_free(const Expr& e) {
  if (e.kind == NodeKind::Compare || e.kind == NodeKind::ForAll || e.kind == NodeKind::And) {
    return false;
  }
  // Filters may compare; bodies and subscripts may not.
  return std::all_of(e.children.begin(), e.children.end(),
                     [](const Expr& c) { return is_comparison_free(c); });
}

bool is_constraint(const Expr& e) {
  if (e.kind == NodeKind::Compare) {
    return is_comparison_free(e.children[0]) && is_comparison_free(e.children[1]);
  }
  if (e.kind == NodeKind::ForAll) return is_constraint(e.children[0]);
  return false;
}

// ---------------------------------------------------------------------------
// Symbols

namespace {

void collect_free(const Expr& e, std::vector<std::string>& bound, std::set<std::string>& idents,
                  std::set<std::string>& sets) {
  auto is_bound = [&](const std::string& n) {
    return std::find(bound.begin(), bound.end(), n) != bound.end();
  };
  switch (e.kind) {
    case NodeKind::Identifier:
      if (!is_bound(e.name)) idents.insert(e.name);
      return;
    case NodeKind::Index:
      if (!is_bound(e.name)) idents.insert(e.name);
      for (const auto& c : e.children) collect_free(c, bound, idents, sets);
      return;
    case NodeKind::Sum:
    case NodeKind::ForAll: {
      const std::size_t mark = bound.size();
      for (const auto& g : e.generators) {
        if (!is_bound(g.set)) sets.insert(g.set);
        for (const auto& v : g.vars) bound.push_back(v);
      }
      for (const auto& c : e.children) collect_free(c, bound, idents, sets);
      for (const auto& f : e.filter) collect_free(f, bound, idents, sets);
      bound.resize(mark);
      return;
    }
    default:
      for (const auto& c : e.children) collect_free(c, bound, idents, sets);
      return;
  }
}

}  // namespace

FreeSymbols free_symbols(const Expr& e) {
  std::vector<std::string> bound;
  std::set<std::string> idents, sets;
  collect_free(e, bound, idents, sets);
  return {std::vector<std::string>(idents.begin(), idents.end()),
          std::vector<std::string>(sets.begin(), sets.end())};
}

std::vector<std::pair<std::string, std::string>> flatten_generators(
    const std::vector<Generator>& generators) {
  std::vector<std::pair<std::string, std::string>> flat;
  for (const auto& g : generators) {
    for (const auto& v : g.vars) flat.emplace_back(v, g.set);
  }
  return flat;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

long long to_index(double v, std::string_view context) {
  if (!std::isfinite(v) || std::floor(v) != v) {
    throw IndexOutOfRange("non-integral subscript " + format_number(v) + " in " +
                          std::string(context));
  }
  return static_cast<long long>(v);
}

std::optional<std::vector<long long>> try_resolve_index_set(const Environment& env,
                                                            std::string_view set) {
  if (auto it = env.index_sets.find(set); it != env.index_sets.end()) return it->second;
  if (auto it = env.inputs.find(set); it != env.inputs.end()) {
    const NumericArray& a = it->second;
    if (a.rank() == 1) {
      std::vector<long long> members;
      members.reserve(a.data().size());
      for (double v : a.data()) members.push_back(to_index(v, set));
      return members;
    }
    if (a.is_scalar()) {
      const long long n = to_index(a.scalar(), set);
      std::vector<long long> members;
      for (long long i = 1; i <= n; ++i) members.push_back(i);
      return members;
    }
  }
  return std::nullopt;
}

const long long* find_scope(const std::vector<std::pair<std::string, long long>>& scope,
                            std::string_view name) {
  for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
    if (it->first == name) return &it->second;
  }
  return nullptr;
}

}  // namespace

std::vector<long long> resolve_index_set(const Environment& env, std::string_view set) {
  if (auto members = try_resolve_index_set(env, set)) return *members;
  throw UnboundIdentifier("index set '" + std::string(set) + "' is not bound");
}

bool comparison_holds(CompareOp op, double lhs, double rhs) {
  switch (op) {
    case CompareOp::Le: return lhs <= rhs + kFeasibilitySlack;
    case CompareOp::Ge: return lhs >= rhs - kFeasibilitySlack;
    case CompareOp::Eq: return std::fabs(lhs - rhs) <= kFeasibilitySlack;
    case CompareOp::Lt: return lhs < rhs;
    case CompareOp::Gt: return lhs > rhs;
    case CompareOp::Ne: return lhs != rhs;
  }
  return false;
}

namespace {

bool exact_holds(CompareOp op, double lhs, double rhs) {
  switch (op) {
    case CompareOp::Le: return lhs <= rhs;
    case CompareOp::Ge: return lhs >= rhs;
    case CompareOp::Eq: return lhs == rhs;
    case CompareOp::Lt: return lhs < rhs;
    case CompareOp::Gt: return lhs > rhs;
    case CompareOp::Ne: return lhs != rhs;
  }
  return false;
}

}  // namespace

double eval_arith_scoped(const Expr& e, const Environment& env,
                         std::vector<std::pair<std::string, long long>>& scope) {
  switch (e.kind) {
    case NodeKind::Number:
      return e.number;
    case NodeKind::Identifier: {
      if (const long long* v = find_scope(scope, e.name)) return static_cast<double>(*v);
      if (auto it = env.inputs.find(e.name); it != env.inputs.end()) {
        if (!it->second.is_scalar()) {
          throw EvaluationError("input '" + e.name + "' is an array and needs subscripts");
        }
        return it->second.scalar();
      }
      if (auto it = env.assignment.find(e.name); it != env.assignment.end()) return it->second;
      throw UnboundIdentifier("unbound identifier '" + e.name + "'");
    }
    case NodeKind::Index: {
      std::vector<long long> idx;
      idx.reserve(e.children.size());
      for (const auto& sub : e.children) idx.push_back(to_index(eval_arith_scoped(sub, env, scope), e.name));
      if (auto it = env.inputs.find(e.name); it != env.inputs.end()) {
        const NumericArray& a = it->second;
        if (a.rank() != idx.size()) {
          throw IndexOutOfRange("input '" + e.name + "' has rank " + std::to_string(a.rank()) +
                                " but " + std::to_string(idx.size()) + " subscripts were given");
        }
        std::vector<std::size_t> zero_based(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
          if (idx[k] < 1 || static_cast<std::size_t>(idx[k]) > a.shape()[k]) {
            throw IndexOutOfRange(variable_key(e.name, idx) + " is outside extent " +
                                  std::to_string(a.shape()[k]) + " (1-based)");
          }
          zero_based[k] = static_cast<std::size_t>(idx[k] - 1);
        }
        return a.at(zero_based);
      }
      const std::string key = variable_key(e.name, idx);
      if (auto it = env.assignment.find(key); it != env.assignment.end()) return it->second;
      throw UnboundIdentifier("unbound identifier '" + key + "'");
    }
    case NodeKind::Binary: {
      const double lhs = eval_arith_scoped(e.children[0], env, scope);
      const double rhs = eval_arith_scoped(e.children[1], env, scope);
      switch (e.binary_op) {
        case BinaryOp::Add: return lhs + rhs;
        case BinaryOp::Sub: return lhs - rhs;
        case BinaryOp::Mul: return lhs * rhs;
        case BinaryOp::Div:
          if (rhs == 0.0) throw DivisionByZero("division by zero in '" + to_string(e) + "'");
          return lhs / rhs;
      }
      return 0.0;
    }
    case NodeKind::Negate:
      return -eval_arith_scoped(e.children[0], env, scope);
    case NodeKind::Sum: {
      double total = 0.0;
      for_each_binding(e.generators, e.filter, env, scope, [&](auto& s) {
        total += eval_arith_scoped(e.children[0], env, s);
      });
      return total;
    }
    case NodeKind::Compare:
    case NodeKind::And:
    case NodeKind::ForAll:
      throw EvaluationError("comparison used where a number is expected: '" + to_string(e) + "'");
  }
  return 0.0;
}

bool eval_condition(const Expr& cond, const Environment& env,
                    std::vector<std::pair<std::string, long long>>& scope) {
  if (cond.kind == NodeKind::And) {
    return std::all_of(cond.children.begin(), cond.children.end(),
                       [&](const Expr& c) { return eval_condition(c, env, scope); });
  }
  if (cond.kind != NodeKind::Compare) {
    throw EvaluationError("filter must be a comparison: '" + to_string(cond) + "'");
  }
  return exact_holds(cond.compare_op, eval_arith_scoped(cond.children[0], env, scope),
                     eval_arith_scoped(cond.children[1], env, scope));
}

double eval_arith(const Expr& e, const Environment& env) {
  std::vector<std::pair<std::string, long long>> scope;
  return eval_arith_scoped(e, env, scope);
}

std::vector<Violation> eval_constraint(const Expr& c, const Environment& env) {
  std::vector<Violation> violations;
  std::vector<std::pair<std::string, long long>> scope;
  auto check = [&](const Expr& cmp, const std::vector<std::pair<std::string, long long>>& bindings,
                   std::vector<std::pair<std::string, long long>>& s) {
    const double lhs = eval_arith_scoped(cmp.children[0], env, s);
    const double rhs = eval_arith_scoped(cmp.children[1], env, s);
    if (!comparison_holds(cmp.compare_op, lhs, rhs)) {
      violations.push_back({bindings, lhs, rhs, cmp.compare_op});
    }
  };
  if (c.kind == NodeKind::Compare) {
    check(c, {}, scope);
  } else if (c.kind == NodeKind::ForAll) {
    for_each_binding(c.generators, c.filter, env, scope, [&](auto& s) { check(c.children[0], s, s); });
  } else {
    throw EvaluationError("not a constraint: '" + to_string(c) + "'");
  }
  return violations;
}

// ---------------------------------------------------------------------------
// Index-set inference

namespace {

void infer_walk(const Expr& e, const Environment& env,
                std::vector<std::pair<std::string, std::string>>& scope,
                std::map<std::string, std::vector<long long>, std::less<>>& out,
                std::map<std::string, std::size_t>& extents) {
  auto set_of = [&](const std::string& var) -> const std::string* {
    for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
      if (it->first == var) return &it->second;
    }
    return nullptr;
  };
  switch (e.kind) {
    case NodeKind::Index: {
      if (auto it = env.inputs.find(e.name);
          it != env.inputs.end() && it->second.rank() == e.children.size()) {
        for (std::size_t k = 0; k < e.children.size(); ++k) {
          const Expr& sub = e.children[k];
          if (sub.kind != NodeKind::Identifier) continue;
          const std::string* set = set_of(sub.name);
          if (!set || try_resolve_index_set(env, *set)) continue;
          const std::size_t extent = it->second.shape()[k];
          auto [pos, inserted] = extents.emplace(*set, extent);
          if (!inserted && pos->second != extent) {
            throw EvaluationError("index set '" + *set + "' is used with inconsistent extents " +
                                  std::to_string(pos->second) + " and " + std::to_string(extent));
          }
        }
      }
      for (const auto& c : e.children) infer_walk(c, env, scope, out, extents);
      return;
    }
    case NodeKind::Sum:
    case NodeKind::ForAll: {
      const std::size_t mark = scope.size();
      for (const auto& [var, set] : flatten_generators(e.generators)) scope.emplace_back(var, set);
      for (const auto& c : e.children) infer_walk(c, env, scope, out, extents);
      for (const auto& f : e.filter) infer_walk(f, env, scope, out, extents);
      scope.resize(mark);
      return;
    }
    default:
      for (const auto& c : e.children) infer_walk(c, env, scope, out, extents);
      return;
  }
}

}  // namespace

std::map<std::string, std::vector<long long>, std::less<>> infer_index_sets(
    const std::vector<Expr>& expressions, const Environment& env) {
  std::map<std::string, std::vector<long long>, std::less<>> out;
  std::map<std::string, std::size_t> extents;
  std::vector<std::pair<std::string, std::string>> scope;
  for (const auto& e : expressions) infer_walk(e, env, scope, out, extents);
  for (const auto& [set, extent] : extents) {
    std::vector<long long> members(extent);
    for (std::size_t i = 0; i < extent; ++i) members[i] = static_cast<long long>(i + 1);
    out.emplace(set, std::move(members));
  }
  return out;
}

}  // namespace execopt::expr
