#include "execopt/toy_optimizer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>

#include "execopt/errors.hpp"
#include "execopt/ground.hpp"
#include "execopt/hashing.hpp"
#include "execopt/kernels.hpp"

namespace execopt {

namespace {

std::pair<long long, long long> parse_bounds(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw SchemaViolation(what + ": bounds must be [lower, upper] integers");
  }
  const auto lo = j[0].get<long long>(), hi = j[1].get<long long>();
  if (lo > hi) throw SchemaViolation(what + ": lower bound exceeds upper bound");
  return {lo, hi};
}

}  // namespace

VariableDomain VariableDomain::from_json(const Json& doc) {
  if (!doc.is_object()) throw MalformedDocument("variable domain must be a JSON object");
  VariableDomain d;
  for (const auto& [key, value] : doc.items()) {
    if (key == "bounds") {
      if (!value.is_object()) throw SchemaViolation("domain 'bounds' must be an object");
      for (const auto& [name, b] : value.items()) {
        d.bounds[normalize_variable_key(name)] = parse_bounds(b, name);
      }
    } else if (key == "default_bounds") {
      d.default_bounds = parse_bounds(value, "default_bounds");
    } else if (key == "index_sets") {
      if (!value.is_object()) throw SchemaViolation("domain 'index_sets' must be an object");
      for (const auto& [name, members] : value.items()) {
        d.index_sets[name] = members.get<std::vector<long long>>();
      }
    } else if (key == "discretize_continuous") {
      d.discretize_continuous = value.get<bool>();
    } else {
      throw SchemaViolation("unknown domain field '" + key + "'");
    }
  }
  return d;
}

VariableDomain VariableDomain::load(const std::filesystem::path& path) {
  try {
    return from_json(Json::parse(read_file(path)));
  } catch (const Json::exception& e) {
    throw MalformedDocument(path.string() + ": " + e.what());
  }
}

Json VariableDomain::to_json() const {
  Json doc = Json::object();
  Json b = Json::object();
  for (const auto& [k, v] : bounds) b[k] = Json::array({v.first, v.second});
  doc["bounds"] = b;
  if (default_bounds) doc["default_bounds"] = Json::array({default_bounds->first, default_bounds->second});
  Json sets = Json::object();
  for (const auto& [k, v] : index_sets) sets[k] = v;
  doc["index_sets"] = sets;
  doc["discretize_continuous"] = discretize_continuous;
  return doc;
}

SolverRun toy_optimize(const DecisionProcess& p, const VariableDomain& domain,
                       const ToyOptions& options, std::string* diagnostic) {
  const auto start = std::chrono::steady_clock::now();
  SolverRun run;
  run.solver_name = "toy-bruteforce";
  auto finish = [&](SolverStatus status, std::string why) {
    run.status = status;
    run.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (diagnostic) *diagnostic = std::move(why);
    return run;
  };

  Instance inst;
  try {
    inst = instantiate(p, domain.index_sets);
  } catch (const Error& e) {
    return finish(SolverStatus::Error, std::string("cannot instantiate the model: ") + e.what());
  }

  std::vector<std::string> free_names;
  kernels::Grid grid;
  std::map<std::string, double> fixed;
  for (const auto& key : inst.variables) {
    const DecisionVariable* decl = p.find_variable(split_variable_key(key).first);
    if (decl->var_type == VarType::Continuous && !domain.discretize_continuous) {
      return finish(SolverStatus::Error,
                    "variable " + key + " is CONTINUOUS; the grid search needs integer variables");
    }
    std::pair<long long, long long> b;
    if (auto it = domain.bounds.find(key); it != domain.bounds.end()) {
      b = it->second;
    } else if (domain.default_bounds) {
      b = *domain.default_bounds;
    } else {
      return finish(SolverStatus::Error, "no bounds for variable " + key);
    }
    if (decl->var_type == VarType::Binary) b = {std::max(b.first, 0LL), std::min(b.second, 1LL)};
    if (b.first > b.second) return finish(SolverStatus::Error, "empty domain for variable " + key);
    if (b.first == b.second) {
      fixed[key] = static_cast<double>(b.first);
    } else {
      free_names.push_back(key);
      grid.lower.push_back(b.first);
      grid.upper.push_back(b.second);
    }
  }
  if (free_names.size() > options.max_free_variables) {
    return finish(SolverStatus::Error, "CapExceeded: " + std::to_string(free_names.size()) +
                                           " free variables, cap is " +
                                           std::to_string(options.max_free_variables));
  }
  const std::uint64_t points = grid.size();
  if (points == 0 || points > options.max_grid_points) {
    return finish(SolverStatus::Error, "CapExceeded: grid exceeds " +
                                           std::to_string(options.max_grid_points) + " points");
  }

  ground::Model model;
  try {
    model = ground::ground_process(p, inst.env, free_names, fixed);
  } catch (const Error& e) {
    return finish(SolverStatus::Error, std::string("cannot ground the model: ") + e.what());
  }
  const Direction dir = p.objective_function.direction;
  const auto best = options.parallel ? kernels::enumerate_grid(model, grid, dir)
                                     : kernels::enumerate_grid_serial(model, grid, dir);
  run.iterations = static_cast<long long>(best.points_evaluated);
  if (!best.found) return finish(SolverStatus::Infeasible, "no feasible grid point");

  std::vector<double> point(free_names.size());
  grid.decode(best.index, point);
  std::map<std::string, double> assignment = fixed;
  for (std::size_t k = 0; k < free_names.size(); ++k) assignment[free_names[k]] = point[k];

  // Re-check the winner with the reference evaluator.
  for (const auto& [k, v] : assignment) inst.env.assignment[k] = v;
  try {
    for (const auto& c : inst.constraints) {
      if (!expr::eval_constraint(c, inst.env).empty()) {
        return finish(SolverStatus::Error, "grounded and reference evaluation disagree");
      }
    }
    run.objective_value = expr::eval_arith(inst.objective, inst.env);
  } catch (const Error& e) {
    return finish(SolverStatus::Error, std::string("evaluation failed: ") + e.what());
  }
  run.variables = std::move(assignment);
  run.gap = 0.0;
  return finish(SolverStatus::Optimal, "");
}

DriverOutput ToyDriver::run(const OptimizerTask& task) {
  DriverOutput out;
  out.run = toy_optimize(task.process, domain_, options_);
  out.run.variant_name = task.variant_name;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view argument(std::string_view text, std::string_view name) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw ConfigError("fault '" + std::string(name) + "' needs an argument in parentheses");
  }
  return trim(text.substr(open + 1, close - open - 1));
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

Fault Fault::parse(std::string_view text) {
  text = trim(text);
  Fault f;
  if (auto at = text.rfind('@'); at != std::string_view::npos) {
    const auto heal = trim(text.substr(at + 1));
    if (heal == "never") {
      f.heals_after.reset();
    } else {
      int n = 0;
      auto [ptr, ec] = std::from_chars(heal.data(), heal.data() + heal.size(), n);
      if (ec != std::errc() || ptr != heal.data() + heal.size() || n < 0) {
        throw ConfigError("bad heal count in fault '" + std::string(text) + "'");
      }
      f.heals_after = n;
    }
    text = trim(text.substr(0, at));
  }
  const std::string name(trim(text.substr(0, text.find('('))));
  if (name == "drop-constraint") {
    const auto arg = argument(text, name);
    std::size_t i = 0;
    auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), i);
    if (ec != std::errc() || ptr != arg.data() + arg.size()) {
      throw ConfigError("drop-constraint needs a constraint index");
    }
    f.kind = Kind::DropConstraint;
    f.constraint = i;
  } else if (name == "flip-objective-sign") {
    f.kind = Kind::FlipObjectiveSign;
  } else if (name == "perturb-objective") {
    const auto arg = argument(text, name);
    double eps = 0.0;
    auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), eps);
    if (ec != std::errc() || ptr != arg.data() + arg.size()) {
      throw ConfigError("perturb-objective needs a number");
    }
    f.kind = Kind::PerturbObjective;
    f.epsilon = eps;
  } else if (name == "report-status") {
    f.kind = Kind::ReportStatus;
    f.status = parse_status(argument(text, name));
  } else {
    throw ConfigError("unknown fault '" + std::string(text) + "'");
  }
  return f;
}

std::string Fault::describe() const {
  switch (kind) {
    case Kind::DropConstraint: return "drop-constraint(" + std::to_string(constraint) + ")";
    case Kind::FlipObjectiveSign: return "flip-objective-sign";
    case Kind::PerturbObjective: return "perturb-objective(" + format_number(epsilon) + ")";
    case Kind::ReportStatus: return "report-status(" + std::string(to_string(status)) + ")";
  }
  return "?";
}

bool Fault::mentioned_in(const Json& report) const {
  switch (kind) {
    case Kind::DropConstraint:
      if (report.contains("constraint_violations")) {
        for (const auto& v : report["constraint_violations"]) {
          if (v.value("constraint_index", static_cast<std::size_t>(-1)) == constraint) return true;
        }
      }
      return false;
    case Kind::FlipObjectiveSign:
    case Kind::PerturbObjective:
      return report.contains("objective_mismatch") && !report["objective_mismatch"].is_null();
    case Kind::ReportStatus:
      return report.contains("status_issue") && !report["status_issue"].is_null();
  }
  return false;
}

FaultyDriver::FaultyDriver(VariableDomain domain, ToyOptions options, std::vector<Fault> faults)
    : domain_(std::move(domain)),
      options_(options),
      faults_(std::move(faults)),
      mentions_(faults_.size(), 0),
      healed_(faults_.size(), false) {
  for (std::size_t k = 0; k < faults_.size(); ++k) {
    if (faults_[k].heals_after && *faults_[k].heals_after == 0) healed_[k] = true;
  }
}

DriverOutput FaultyDriver::run(const OptimizerTask& task) {
  DriverOutput out;
  std::vector<bool> active(faults_.size());
  {
    std::lock_guard lock(mu_);
    for (std::size_t k = 0; k < faults_.size(); ++k) {
      const Fault& f = faults_[k];
      if (!healed_[k] && task.feedback && f.mentioned_in(*task.feedback)) {
        ++mentions_[k];
        if (f.heals_after && mentions_[k] >= *f.heals_after) {
          healed_[k] = true;
          out.fixes_applied.push_back("fixed " + f.describe());
        }
      }
      active[k] = !healed_[k];
    }
  }

  DecisionProcess p = task.process;
  std::vector<std::size_t> drop;
  for (std::size_t k = 0; k < faults_.size(); ++k) {
    if (active[k] && faults_[k].kind == Fault::Kind::DropConstraint) {
      if (faults_[k].constraint >= p.constraints.size()) {
        throw ConfigError("fault " + faults_[k].describe() + " names a missing constraint");
      }
      drop.push_back(faults_[k].constraint);
    }
  }
  std::sort(drop.rbegin(), drop.rend());
  drop.erase(std::unique(drop.begin(), drop.end()), drop.end());
  for (std::size_t i : drop) p.constraints.erase(p.constraints.begin() + static_cast<std::ptrdiff_t>(i));

  out.run = toy_optimize(p, domain_, options_);
  out.run.variant_name = task.variant_name;
  for (std::size_t k = 0; k < faults_.size(); ++k) {
    if (!active[k]) continue;
    const Fault& f = faults_[k];
    switch (f.kind) {
      case Fault::Kind::DropConstraint:
        break;
      case Fault::Kind::FlipObjectiveSign:
        if (out.run.objective_value) out.run.objective_value = -*out.run.objective_value;
        break;
      case Fault::Kind::PerturbObjective:
        if (out.run.objective_value) *out.run.objective_value += f.epsilon;
        break;
      case Fault::Kind::ReportStatus:
        out.run.status = f.status;
        if (f.status != SolverStatus::Optimal && f.status != SolverStatus::TimeLimit) {
          out.run.variables.clear();
          out.run.objective_value.reset();
        }
        break;
    }
  }
  return out;
}

std::vector<std::shared_ptr<OptimizerDriver>> faulty_optimize_variants(
    const VariableDomain& domain, const ToyOptions& options,
    const std::vector<std::vector<Fault>>& faults_per_variant) {
  std::vector<std::shared_ptr<OptimizerDriver>> out;
  for (const auto& faults : faults_per_variant) {
    if (faults.empty()) {
      out.push_back(std::make_shared<ToyDriver>(domain, options));
    } else {
      out.push_back(std::make_shared<FaultyDriver>(domain, options, faults));
    }
  }
  return out;
}

}  // namespace execopt
