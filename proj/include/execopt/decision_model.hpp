#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace execopt {

using Json = nlohmann::ordered_json;

enum class VarType { Integer, Continuous, Binary };
enum class Direction { Minimize, Maximize };

// Declaration order is the tie-break priority: Optimal wins over everything.
enum class SolverStatus { Optimal, TimeLimit, Infeasible, Unbounded, Error };

inline constexpr SolverStatus kAllStatuses[] = {
    SolverStatus::Optimal, SolverStatus::TimeLimit, SolverStatus::Infeasible,
    SolverStatus::Unbounded, SolverStatus::Error};

// True when `a` is preferred over `b` in a tie.
constexpr bool status_precedes(SolverStatus a, SolverStatus b) {
  return static_cast<int>(a) < static_cast<int>(b);
}

std::string_view to_string(VarType t);
std::string_view to_string(Direction d);
std::string_view to_string(SolverStatus s);  // "optimal", "time_limit", ...
VarType parse_var_type(std::string_view text);
Direction parse_direction(std::string_view text);
SolverStatus parse_status(std::string_view text);

// Scalar or rectangular nested list of numbers, stored row-major.
class NumericArray {
 public:
  NumericArray() = default;
  explicit NumericArray(double scalar) : data_{scalar} {}
  NumericArray(std::vector<std::size_t> shape, std::vector<double> data);

  static NumericArray vector(std::vector<double> values);
  static NumericArray matrix(const std::vector<std::vector<double>>& rows);

  bool is_scalar() const { return shape_.empty(); }
  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  const std::vector<double>& data() const { return data_; }
  double scalar() const;

  // Zero-based element access; throws IndexOutOfRange.
  double at(std::span<const std::size_t> index) const;

  // Nested JSON arrays; integral values print without a fractional part.
  Json to_json() const;
  static NumericArray from_json(const Json& value, std::string_view context);

  bool operator==(const NumericArray&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

struct DecisionVariable {
  std::string name;  // may carry an index signature, e.g. "x[i,j]"
  VarType var_type = VarType::Continuous;
  std::string description;

  std::string base_name() const;
  std::size_t index_arity() const;
  bool operator==(const DecisionVariable&) const = default;
};

struct InputParameter {
  std::string name;
  NumericArray value;
  std::string units;
  std::string description;
  bool operator==(const InputParameter&) const = default;
};

struct ObjectiveSpec {
  Direction direction = Direction::Minimize;
  std::string expression;
  std::string description;
  bool operator==(const ObjectiveSpec&) const = default;
};

struct ConstraintSpec {
  std::string expression;
  std::string description;
  bool operator==(const ConstraintSpec&) const = default;
};

struct DecisionProcess {
  std::string problem_description;
  std::vector<DecisionVariable> decision_variables;
  std::vector<InputParameter> inputs;
  Json exogenous_variables = Json::array();
  Json exogenous_uncertainties = Json::array();
  Json state_variables = Json::array();
  std::string transition_function;
  ObjectiveSpec objective_function;
  std::vector<ConstraintSpec> constraints;

  const DecisionVariable* find_variable(std::string_view base) const;
  const InputParameter* find_input(std::string_view name) const;
  bool has_integer_structure() const;

  bool operator==(const DecisionProcess&) const = default;
};

// Strict parse: unknown keys, wrong types, unparsable expressions and
// undeclared identifiers are all rejected.
DecisionProcess parse_decision_process(std::string_view document);
DecisionProcess decision_process_from_json(const Json& document);

// Checks every invariant; throws SchemaViolation / UndeclaredSymbol /
// SyntaxError.
void validate_decision_process(const DecisionProcess& p);

Json decision_process_to_json(const DecisionProcess& p);
std::string serialize_decision_process(const DecisionProcess& p);

// Canonical key of one instantiated variable: "x[3,6]" or plain "a".
std::string variable_key(std::string_view base, std::span<const long long> index);
// Removes whitespace inside brackets so "x[3, 6]" and "x[3,6]" agree.
std::string normalize_variable_key(std::string_view key);

struct SolverRun {
  std::string variant_name;
  std::map<std::string, double> variables;
  std::optional<double> objective_value;
  SolverStatus status = SolverStatus::Error;
  std::string solver_name;
  double solve_time = 0.0;
  long long iterations = 0;
  std::optional<double> gap;

  bool operator==(const SolverRun&) const = default;
};

// Optimizer output schema: optimal_variables / optimal_objective_value /
// status / solver_info.
Json solver_run_to_json(const SolverRun& run);
SolverRun solver_run_from_json(const Json& document, std::string variant_name);

// Shared double formatting for JSON payloads: integral values are kept as
// floating point so "8090.0" survives a round trip.
Json number_or_null(std::optional<double> value);

}  // namespace execopt
