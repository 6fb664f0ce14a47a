#include "execopt/decision_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "execopt/errors.hpp"
#include "execopt/expr.hpp"

namespace execopt {

std::string_view to_string(VarType t) {
  switch (t) {
    case VarType::Integer: return "INTEGER";
    case VarType::Continuous: return "CONTINUOUS";
    case VarType::Binary: return "BINARY";
  }
  return "?";
}

std::string_view to_string(Direction d) {
  return d == Direction::Minimize ? "minimize" : "maximize";
}

std::string_view to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::TimeLimit: return "time_limit";
    case SolverStatus::Infeasible: return "infeasible";
    case SolverStatus::Unbounded: return "unbounded";
    case SolverStatus::Error: return "error";
  }
  return "error";
}

VarType parse_var_type(std::string_view text) {
  if (text == "INTEGER") return VarType::Integer;
  if (text == "CONTINUOUS") return VarType::Continuous;
  if (text == "BINARY") return VarType::Binary;
  throw SchemaViolation("decision variable type must be INTEGER, CONTINUOUS or BINARY, got '" +
                        std::string(text) + "'");
}

Direction parse_direction(std::string_view text) {
  if (text == "minimize") return Direction::Minimize;
  if (text == "maximize") return Direction::Maximize;
  throw SchemaViolation("objective direction must be minimize or maximize, got '" +
                        std::string(text) + "'");
}

SolverStatus parse_status(std::string_view text) {
  std::string norm;
  for (char c : text) {
    if (c == ' ' || c == '-' || c == '_') continue;
    norm += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (norm == "optimal") return SolverStatus::Optimal;
  if (norm == "timelimit") return SolverStatus::TimeLimit;
  if (norm == "infeasible") return SolverStatus::Infeasible;
  if (norm == "unbounded") return SolverStatus::Unbounded;
  if (norm == "error") return SolverStatus::Error;
  throw SchemaViolation("unknown solver status '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// NumericArray

NumericArray::NumericArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  std::size_t n = 1;
  for (std::size_t d : shape_) n *= d;
  if (n != data_.size()) {
    throw SchemaViolation("array data size " + std::to_string(data_.size()) +
                          " does not match its shape");
  }
}

NumericArray NumericArray::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return NumericArray({n}, std::move(values));
}

NumericArray NumericArray::matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  std::vector<double> data;
  for (const auto& r : rows) {
    if (r.size() != cols) throw SchemaViolation("matrix rows have unequal lengths");
    data.insert(data.end(), r.begin(), r.end());
  }
  return NumericArray({rows.size(), cols}, std::move(data));
}

double NumericArray::scalar() const {
  if (!is_scalar()) throw SchemaViolation("value is not a scalar");
  return data_.front();
}

double NumericArray::at(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw IndexOutOfRange("expected " + std::to_string(shape_.size()) + " subscripts");
  }
  std::size_t flat = 0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= shape_[k]) throw IndexOutOfRange("subscript outside array extent");
    flat = flat * shape_[k] + index[k];
  }
  return data_[flat];
}

namespace {

Json number_json(double v) {
  if (std::isfinite(v) && std::floor(v) == v && std::fabs(v) < 9.0e15) {
    return Json(static_cast<long long>(v));
  }
  return Json(v);
}

}  // namespace

Json NumericArray::to_json() const {
  if (is_scalar()) return number_json(data_.front());
  auto build = [&](auto&& self, std::size_t depth, std::size_t offset) -> Json {
    Json arr = Json::array();
    std::size_t stride = 1;
    for (std::size_t d = depth + 1; d < shape_.size(); ++d) stride *= shape_[d];
    for (std::size_t i = 0; i < shape_[depth]; ++i) {
      if (depth + 1 == shape_.size()) {
        arr.push_back(number_json(data_[offset + i]));
      } else {
        arr.push_back(self(self, depth + 1, offset + i * stride));
      }
    }
    return arr;
  };
  return build(build, 0, 0);
}

NumericArray NumericArray::from_json(const Json& value, std::string_view context) {
  if (value.is_number()) return NumericArray(value.get<double>());
  if (!value.is_array()) {
    throw SchemaViolation(std::string(context) + ": value must be a number or nested list of numbers");
  }
  std::vector<std::size_t> shape;
  const Json* probe = &value;
  while (probe->is_array()) {
    shape.push_back(probe->size());
    if (probe->empty()) break;
    probe = &probe->front();
  }
  std::vector<double> data;
  auto walk = [&](auto&& self, const Json& node, std::size_t depth) -> void {
    if (depth == shape.size()) {
      if (!node.is_number()) {
        throw SchemaViolation(std::string(context) + ": non-numeric entry in value");
      }
      data.push_back(node.get<double>());
      return;
    }
    if (!node.is_array() || node.size() != shape[depth]) {
      throw SchemaViolation(std::string(context) + ": nested list is not rectangular");
    }
    for (const auto& child : node) self(self, child, depth + 1);
  };
  walk(walk, value, 0);
  return NumericArray(std::move(shape), std::move(data));
}

// ---------------------------------------------------------------------------
// Decision process

std::string DecisionVariable::base_name() const {
  const auto bracket = name.find('[');
  std::string base = name.substr(0, bracket);
  while (!base.empty() && std::isspace(static_cast<unsigned char>(base.back()))) base.pop_back();
  return base;
}

std::size_t DecisionVariable::index_arity() const {
  const auto open = name.find('[');
  if (open == std::string::npos) return 0;
  return static_cast<std::size_t>(std::count(name.begin() + open, name.end(), ',')) + 1;
}

const DecisionVariable* DecisionProcess::find_variable(std::string_view base) const {
  for (const auto& v : decision_variables) {
    if (v.base_name() == base) return &v;
  }
  return nullptr;
}

const InputParameter* DecisionProcess::find_input(std::string_view name) const {
  for (const auto& in : inputs) {
    if (in.name == name) return &in;
  }
  return nullptr;
}

bool DecisionProcess::has_integer_structure() const {
  return std::any_of(decision_variables.begin(), decision_variables.end(),
                     [](const DecisionVariable& v) { return v.var_type != VarType::Continuous; });
}

namespace {

void require_keys(const Json& obj, std::string_view context,
                  std::initializer_list<std::string_view> required,
                  std::initializer_list<std::string_view> optional) {
  if (!obj.is_object()) throw SchemaViolation(std::string(context) + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known = std::find(required.begin(), required.end(), it.key()) != required.end() ||
                       std::find(optional.begin(), optional.end(), it.key()) != optional.end();
    if (!known) {
      throw SchemaViolation(std::string(context) + ": unknown field '" + it.key() + "'");
    }
  }
  for (auto key : required) {
    if (!obj.contains(key)) {
      throw SchemaViolation(std::string(context) + ": missing field '" + std::string(key) + "'");
    }
  }
}

std::string get_string(const Json& obj, std::string_view key, std::string_view context) {
  const Json& v = obj.at(std::string(key));
  if (!v.is_string()) {
    throw SchemaViolation(std::string(context) + ": field '" + std::string(key) +
                          "' must be a string");
  }
  return v.get<std::string>();
}

Json get_array(const Json& obj, std::string_view key, std::string_view context) {
  const Json& v = obj.at(std::string(key));
  if (!v.is_array()) {
    throw SchemaViolation(std::string(context) + ": field '" + std::string(key) +
                          "' must be an array");
  }
  return v;
}

std::vector<std::string> opaque_names(const Json& list) {
  std::vector<std::string> names;
  for (const auto& item : list) {
    if (item.is_string()) {
      names.push_back(item.get<std::string>());
    } else if (item.is_object() && item.contains("name") && item["name"].is_string()) {
      DecisionVariable tmp{item["name"].get<std::string>(), VarType::Continuous, ""};
      names.push_back(tmp.base_name());
    }
  }
  return names;
}

}  // namespace

DecisionProcess decision_process_from_json(const Json& doc) {
  require_keys(doc, "decision process",
               {"decision_variables", "inputs", "exogenous_variables", "exogenous_uncertainties",
                "state_variables", "transition_function", "objective_function", "constraints"},
               {"problem_description"});
  DecisionProcess p;
  if (doc.contains("problem_description")) {
    p.problem_description = get_string(doc, "problem_description", "decision process");
  }

  for (const auto& v : get_array(doc, "decision_variables", "decision process")) {
    require_keys(v, "decision_variables[]", {"name", "type", "description"}, {});
    p.decision_variables.push_back({get_string(v, "name", "decision_variables[]"),
                                    parse_var_type(get_string(v, "type", "decision_variables[]")),
                                    get_string(v, "description", "decision_variables[]")});
  }
  for (const auto& in : get_array(doc, "inputs", "decision process")) {
    require_keys(in, "inputs[]", {"name", "value", "units", "description"}, {});
    const std::string name = get_string(in, "name", "inputs[]");
    p.inputs.push_back({name, NumericArray::from_json(in.at("value"), "input '" + name + "'"),
                        get_string(in, "units", "inputs[]"),
                        get_string(in, "description", "inputs[]")});
  }
  p.exogenous_variables = get_array(doc, "exogenous_variables", "decision process");
  p.exogenous_uncertainties = get_array(doc, "exogenous_uncertainties", "decision process");
  p.state_variables = get_array(doc, "state_variables", "decision process");
  p.transition_function = get_string(doc, "transition_function", "decision process");

  const Json& obj = doc.at("objective_function");
  require_keys(obj, "objective_function", {"direction", "expression", "description"}, {});
  p.objective_function = {parse_direction(get_string(obj, "direction", "objective_function")),
                          get_string(obj, "expression", "objective_function"),
                          get_string(obj, "description", "objective_function")};

  for (const auto& c : get_array(doc, "constraints", "decision process")) {
    require_keys(c, "constraints[]", {"expression", "description"}, {});
    p.constraints.push_back(
        {get_string(c, "expression", "constraints[]"), get_string(c, "description", "constraints[]")});
  }
  validate_decision_process(p);
  return p;
}

DecisionProcess parse_decision_process(std::string_view document) {
  Json doc;
  try {
    doc = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw MalformedDocument(std::string("not valid JSON: ") + e.what());
  }
  return decision_process_from_json(doc);
}

void validate_decision_process(const DecisionProcess& p) {
  std::set<std::string> declared;
  for (const auto& v : p.decision_variables) {
    const std::string base = v.base_name();
    if (base.empty()) throw SchemaViolation("decision variable with empty name");
    if (!declared.insert(base).second) {
      throw SchemaViolation("duplicate decision variable '" + base + "'");
    }
  }
  for (const auto& in : p.inputs) {
    if (in.name.empty()) throw SchemaViolation("input with empty name");
    if (!declared.insert(in.name).second) {
      throw SchemaViolation("duplicate symbol '" + in.name + "'");
    }
  }
  for (const auto* list : {&p.exogenous_variables, &p.exogenous_uncertainties, &p.state_variables}) {
    for (auto& n : opaque_names(*list)) declared.insert(n);
  }

  auto check_symbols = [&](const expr::Expr& e) {
    for (const auto& id : expr::free_symbols(e).identifiers) {
      if (!declared.count(id)) throw UndeclaredSymbol(id);
    }
  };

  const expr::Expr objective = expr::parse_expr(p.objective_function.expression);
  if (!expr::is_comparison_free(objective)) {
    throw SchemaViolation("objective expression must not contain comparisons");
  }
  check_symbols(objective);
  for (const auto& c : p.constraints) {
    const expr::Expr e = expr::parse_expr(c.expression);
    if (!expr::is_constraint(e)) {
      throw SchemaViolation("constraint is not a comparison: '" + c.expression + "'");
    }
    check_symbols(e);
  }
}

Json decision_process_to_json(const DecisionProcess& p) {
  Json doc = Json::object();
  doc["problem_description"] = p.problem_description;
  Json vars = Json::array();
  for (const auto& v : p.decision_variables) {
    vars.push_back(Json{{"name", v.name}, {"type", to_string(v.var_type)}, {"description", v.description}});
  }
  doc["decision_variables"] = vars;
  Json inputs = Json::array();
  for (const auto& in : p.inputs) {
    inputs.push_back(Json{{"name", in.name},
                          {"value", in.value.to_json()},
                          {"units", in.units},
                          {"description", in.description}});
  }
  doc["inputs"] = inputs;
  doc["exogenous_variables"] = p.exogenous_variables;
  doc["exogenous_uncertainties"] = p.exogenous_uncertainties;
  doc["state_variables"] = p.state_variables;
  doc["transition_function"] = p.transition_function;
  doc["objective_function"] = Json{{"direction", to_string(p.objective_function.direction)},
                                   {"expression", p.objective_function.expression},
                                   {"description", p.objective_function.description}};
  Json cons = Json::array();
  for (const auto& c : p.constraints) {
    cons.push_back(Json{{"expression", c.expression}, {"description", c.description}});
  }
  doc["constraints"] = cons;
  return doc;
}

std::string serialize_decision_process(const DecisionProcess& p) {
  return decision_process_to_json(p).dump(2);
}

std::string variable_key(std::string_view base, std::span<const long long> index) {
  std::string key(base);
  if (index.empty()) return key;
  key += '[';
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (i) key += ',';
    key += std::to_string(index[i]);
  }
  key += ']';
  return key;
}

std::string normalize_variable_key(std::string_view key) {
  std::string out;
  out.reserve(key.size());
  for (char c : key) {
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Solver runs

Json number_or_null(std::optional<double> value) {
  if (!value || !std::isfinite(*value)) return Json(nullptr);
  return Json(*value);
}

Json solver_run_to_json(const SolverRun& run) {
  Json vars = Json::object();
  for (const auto& [k, v] : run.variables) vars[k] = v;
  Json doc = Json::object();
  doc["optimal_variables"] = vars;
  doc["optimal_objective_value"] = number_or_null(run.objective_value);
  doc["status"] = to_string(run.status);
  doc["solver_info"] = Json{{"solver_name", run.solver_name},
                            {"solve_time", run.solve_time},
                            {"iterations", run.iterations},
                            {"gap", number_or_null(run.gap)}};
  return doc;
}

SolverRun solver_run_from_json(const Json& doc, std::string variant_name) {
  if (!doc.is_object()) throw SchemaViolation("optimizer result must be a JSON object");
  SolverRun run;
  run.variant_name = std::move(variant_name);
  if (!doc.contains("status") || !doc["status"].is_string()) {
    throw SchemaViolation("optimizer result: missing string field 'status'");
  }
  run.status = parse_status(doc["status"].get<std::string>());
  if (doc.contains("optimal_variables") && !doc["optimal_variables"].is_null()) {
    const Json& vars = doc["optimal_variables"];
    if (!vars.is_object()) throw SchemaViolation("optimal_variables must be an object");
    for (auto it = vars.begin(); it != vars.end(); ++it) {
      if (!it.value().is_number()) {
        throw SchemaViolation("optimal_variables['" + it.key() + "'] must be a number");
      }
      run.variables[normalize_variable_key(it.key())] = it.value().get<double>();
    }
  }
  if (doc.contains("optimal_objective_value") && !doc["optimal_objective_value"].is_null()) {
    if (!doc["optimal_objective_value"].is_number()) {
      throw SchemaViolation("optimal_objective_value must be a number or null");
    }
    run.objective_value = doc["optimal_objective_value"].get<double>();
  }
  if (doc.contains("solver_info") && doc["solver_info"].is_object()) {
    const Json& info = doc["solver_info"];
    if (info.contains("solver_name") && info["solver_name"].is_string()) {
      run.solver_name = info["solver_name"].get<std::string>();
    }
    if (info.contains("solve_time") && info["solve_time"].is_number()) {
      run.solve_time = info["solve_time"].get<double>();
    }
    if (info.contains("iterations") && info["iterations"].is_number()) {
      run.iterations = info["iterations"].get<long long>();
    }
    if (info.contains("gap") && info["gap"].is_number()) run.gap = info["gap"].get<double>();
  }
  if (run.solve_time < 0.0) throw SchemaViolation("solve_time must be non-negative");
  if (run.iterations < 0) throw SchemaViolation("iterations must be non-negative");
  if (run.gap && *run.gap < 0.0) throw SchemaViolation("gap must be non-negative");
  return run;
}

}  // namespace execopt
