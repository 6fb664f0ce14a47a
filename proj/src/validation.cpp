#include "execopt/validation.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <set>

#include "execopt/errors.hpp"

namespace execopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return Json(v).dump();
}

std::string format_bindings(const std::vector<std::pair<std::string, long long>>& b) {
  if (b.empty()) return "";
  std::string out = " at ";
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (i) out += ", ";
    out += b[i].first + "=" + std::to_string(b[i].second);
  }
  return out;
}

}  // namespace

SimulatorVerdict simulate(const DecisionProcess& p, const std::map<std::string, double>& assignment,
                          const IndexSets& index_sets) {
  Instance inst = instantiate(p, index_sets);
  std::map<std::string, double, std::less<>> normalized;
  for (const auto& [k, v] : assignment) normalized[normalize_variable_key(k)] = v;

  std::vector<std::string> missing;
  for (const auto& key : inst.variables) {
    if (!normalized.count(key)) missing.push_back(key);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 5; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 5) list += ", ...";
    throw MissingVariable("assignment lacks " + std::to_string(missing.size()) +
                          " variable(s): " + list);
  }
  inst.env.assignment = std::move(normalized);

  SimulatorVerdict v;
  for (std::size_t ci = 0; ci < inst.constraints.size(); ++ci) {
    for (auto& viol : expr::eval_constraint(inst.constraints[ci], inst.env)) {
      ConstraintViolation cv;
      cv.constraint_index = ci;
      cv.expression = p.constraints[ci].expression;
      cv.description = p.constraints[ci].description;
      cv.bindings = std::move(viol.bindings);
      cv.lhs = viol.lhs;
      cv.rhs = viol.rhs;
      cv.op = viol.op;
      v.violations.push_back(std::move(cv));
    }
  }
  for (const auto& key : inst.variables) {
    const double value = inst.env.assignment.find(key)->second;
    const auto* decl = p.find_variable(split_variable_key(key).first);
    if (decl == nullptr) continue;
    if (decl->var_type == VarType::Integer && std::floor(value) != value) {
      v.bound_violations.push_back({key, value, "INTEGER variable takes a fractional value"});
    } else if (decl->var_type == VarType::Binary && value != 0.0 && value != 1.0) {
      v.bound_violations.push_back({key, value, "BINARY variable outside {0, 1}"});
    }
  }
  v.feasible = v.violations.empty() && v.bound_violations.empty();
  v.objective = v.feasible ? expr::eval_arith(inst.objective, inst.env) : kInf;
  return v;
}

void ValidationConfig::validate() const {
  if (!(rtol >= 0.0) || !(atol >= 0.0)) throw ConfigError("validation rtol and atol must be non-negative");
  if (max_iterations < 1) throw ConfigError("maximum validation loops must be at least 1");
}

ValidationOutcome validate(double f_opt, const SimulatorVerdict& verdict, const ValidationConfig& cfg) {
  ValidationOutcome out;
  out.delta = cfg.atol + cfg.rtol * std::fabs(f_opt);
  out.difference = verdict.feasible ? std::fabs(verdict.objective - f_opt) : kInf;
  out.passed = verdict.feasible && out.difference <= out.delta;
  return out;
}

DiscrepancyReport discrepancy_report(const DecisionProcess& p, SolverStatus status,
                                     const std::optional<SimulatorVerdict>& verdict,
                                     std::optional<double> f_opt, const ValidationConfig& cfg,
                                     const std::optional<std::string>& status_detail) {
  DiscrepancyReport r;
  Json j = Json::object();
  j["consensus_status"] = to_string(status);

  if (status_detail) {
    j["status_issue"] = Json{{"status", to_string(status)}, {"detail", *status_detail}};
    r.issues.push_back("status: consensus status is " + std::string(to_string(status)) + "; " +
                       *status_detail);
  } else {
    j["status_issue"] = nullptr;
  }

  Json cviol = Json::array();
  Json bviol = Json::array();
  if (verdict) {
    for (const auto& v : verdict->violations) {
      Json b = Json::object();
      for (const auto& [name, value] : v.bindings) b[name] = value;
      cviol.push_back(Json{{"constraint_index", v.constraint_index},
                           {"description", v.description},
                           {"expression", v.expression},
                           {"bindings", b},
                           {"lhs", v.lhs},
                           {"op", expr::to_string(v.op)},
                           {"rhs", v.rhs}});
      r.issues.push_back("constraint " + std::to_string(v.constraint_index) + " (" +
                         v.description + ") violated" + format_bindings(v.bindings) + ": " +
                         format_double(v.lhs) + " " + std::string(expr::to_string(v.op)) + " " +
                         format_double(v.rhs) + " does not hold");
    }
    for (const auto& b : verdict->bound_violations) {
      bviol.push_back(Json{{"variable", b.variable}, {"value", b.value}, {"rule", b.rule}});
      r.issues.push_back("bound: " + b.variable + " = " + format_double(b.value) + ": " + b.rule);
    }
  }
  j["constraint_violations"] = cviol;
  j["bound_violations"] = bviol;

  j["objective_mismatch"] = nullptr;
  if (verdict && verdict->feasible && f_opt) {
    const auto o = validate(*f_opt, *verdict, cfg);
    if (!o.passed) {
      j["objective_mismatch"] = Json{{"optimizer_value", *f_opt},
                                     {"simulator_value", verdict->objective},
                                     {"difference", o.difference},
                                     {"tolerance", o.delta}};
      r.issues.push_back("objective: optimizer reports " + format_double(*f_opt) +
                         " but the simulator computes " + format_double(verdict->objective) +
                         " (difference " + format_double(o.difference) + " exceeds tolerance " +
                         format_double(o.delta) + ")");
    }
  }
  (void)p;

  r.json = std::move(j);
  for (const auto& line : r.issues) r.text += "- " + line + "\n";
  if (r.text.empty()) r.text = "- no discrepancy\n";
  return r;
}

Json unit_check_to_json(const UnitCheck& c) {
  Json a = Json::object();
  for (const auto& [k, v] : c.assignment) a[k] = v;
  Json j = Json::object();
  j["name"] = c.name;
  j["assignment"] = a;
  j["expect_feasible"] = c.expect_feasible ? Json(*c.expect_feasible) : Json(nullptr);
  j["expect_objective"] = number_or_null(c.expect_objective);
  return j;
}

UnitCheck unit_check_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaViolation("unit check must be an object");
  UnitCheck c;
  c.name = j.value("name", "");
  if (j.contains("assignment")) {
    if (!j["assignment"].is_object()) throw SchemaViolation("unit check assignment must be an object");
    for (const auto& [k, v] : j["assignment"].items()) {
      if (!v.is_number()) throw SchemaViolation("unit check value for " + k + " is not a number");
      c.assignment[normalize_variable_key(k)] = v.get<double>();
    }
  }
  if (j.contains("expect_feasible") && !j["expect_feasible"].is_null()) {
    c.expect_feasible = j["expect_feasible"].get<bool>();
  }
  if (j.contains("expect_objective") && !j["expect_objective"].is_null()) {
    c.expect_objective = j["expect_objective"].get<double>();
  }
  return c;
}

std::vector<UnitCheck> default_unit_checks(const DecisionProcess& p, const IndexSets& index_sets) {
  UnitCheck zero;
  zero.name = "all-zero";
  for (const auto& key : instantiate(p, index_sets).variables) zero.assignment[key] = 0.0;
  return {zero};
}

GateResult simulator_gate(Simulator& sim, const std::vector<UnitCheck>& checks,
                          const ValidationConfig& cfg) {
  GateResult g;
  g.passed = true;
  if (checks.empty()) {
    g.passed = false;
    g.diagnostics.push_back("no unit checks supplied");
    return g;
  }
  for (const auto& c : checks) {
    SimulatorVerdict v;
    try {
      v = sim.run(c.assignment);
    } catch (const Error& e) {
      g.passed = false;
      g.diagnostics.push_back("check '" + c.name + "': simulator failed: " + e.what());
      continue;
    }
    if (v.feasible && !g.feasible_witness) g.feasible_witness = c.name;
    if (c.expect_feasible && v.feasible != *c.expect_feasible) {
      g.passed = false;
      g.diagnostics.push_back("check '" + c.name + "': expected " +
                              (*c.expect_feasible ? "feasible" : "infeasible") + ", simulator says " +
                              (v.feasible ? "feasible" : "infeasible"));
    }
    if (c.expect_objective) {
      const double delta = cfg.atol + cfg.rtol * std::fabs(*c.expect_objective);
      if (!v.feasible || std::fabs(v.objective - *c.expect_objective) > delta) {
        g.passed = false;
        g.diagnostics.push_back("check '" + c.name + "': expected objective " +
                                format_double(*c.expect_objective) + ", simulator gives " +
                                format_double(v.objective));
      }
    }
  }
  return g;
}

std::string variant_name(int index) { return "variant_" + std::to_string(index + 1); }

ValidationReport refinement_loop(const LoopInputs& in) {
  if (in.process == nullptr || in.simulator == nullptr || in.drivers.empty()) {
    throw ConfigError("refinement loop needs a process, a simulator and at least one driver");
  }
  in.validation.validate();
  ValidationReport report;
  report.num_inputs = static_cast<int>(in.process->inputs.size());
  std::optional<Json> feedback;
  std::vector<std::string> expected;
  for (std::size_t v = 0; v < in.drivers.size(); ++v) expected.push_back(variant_name(static_cast<int>(v)));

  for (int it = 0; it < in.validation.max_iterations; ++it) {
    IterationRecord rec;
    rec.iteration = it;

    std::vector<std::future<DriverOutput>> pending;
    for (std::size_t v = 0; v < in.drivers.size(); ++v) {
      OptimizerTask task = in.task_template;
      task.variant_index = static_cast<int>(v);
      task.variant_name = expected[v];
      task.iteration = it;
      task.feedback = feedback;
      pending.push_back(std::async(std::launch::async, [driver = in.drivers[v], task]() {
        return driver->run(task);
      }));
    }
    std::vector<SolverRun> runs;
    for (std::size_t v = 0; v < pending.size(); ++v) {
      DriverOutput out;
      try {
        out = pending[v].get();
      } catch (const std::exception& e) {
        out.run.status = SolverStatus::Error;
        out.fixes_applied.clear();
        rec.issues_found.push_back(expected[v] + ": optimizer failed: " + e.what());
      }
      out.run.variant_name = expected[v];
      for (const auto& f : out.fixes_applied) rec.fixes_applied.push_back(expected[v] + ": " + f);
      runs.push_back(out.run);
      rec.outputs.push_back(std::move(out));
    }

    rec.consensus = consensus(runs, in.consensus, expected);
    const SolverStatus status = rec.consensus.status;
    std::optional<std::string> status_detail;

    if (status == SolverStatus::Optimal || status == SolverStatus::TimeLimit) {
      try {
        rec.verdict = in.simulator->run(rec.consensus.variables);
        rec.outcome = validate(*rec.consensus.objective_value, *rec.verdict, in.validation);
        rec.passed = rec.outcome.passed;
      } catch (const Error& e) {
        status_detail = std::string("the simulator could not evaluate the solution: ") + e.what();
        rec.passed = false;
      }
    } else if (status == SolverStatus::Infeasible) {
      if (in.feasible_witness) {
        status_detail = "the simulator found unit check '" + *in.feasible_witness + "' feasible";
        rec.passed = false;
      } else {
        rec.passed = true;  // nothing refutes the infeasibility claim
      }
    } else {
      status_detail = "no solution was produced";
      rec.passed = false;
    }

    if (!rec.passed) {
      rec.report = discrepancy_report(*in.process, status, rec.verdict, rec.consensus.objective_value,
                                      in.validation, status_detail);
      rec.report->json["iteration"] = it;
      for (const auto& issue : rec.report->issues) rec.issues_found.push_back(issue);
      feedback = rec.report->json;
    }
    report.history.push_back(rec);
    if (in.on_iteration) in.on_iteration(report.history.back());
    if (rec.passed) break;
  }
  report.passed = !report.history.empty() && report.history.back().passed;
  return report;
}

Json validation_report_to_json(const ValidationReport& r) {
  Json doc = Json::object();
  doc["passed"] = r.passed;
  doc["num_validation_iterations"] = static_cast<int>(r.history.size());

  const IterationRecord* last = r.history.empty() ? nullptr : &r.history.back();
  const bool has_verdict = last && last->verdict;

  Json analysis = Json::object();
  analysis["problem_feasible"] =
      has_verdict ? Json(last->verdict->feasible)
                  : (last && last->consensus.status == SolverStatus::Infeasible ? Json(false) : Json(nullptr));
  bool trivial = false;
  if (last && !last->consensus.variables.empty()) {
    trivial = true;
    for (const auto& [k, v] : last->consensus.variables) {
      if (v != 0.0) trivial = false;
    }
  }
  analysis["has_trivial_solutions"] = trivial;
  Json infeasibility = Json::object();
  if (last && last->consensus.status == SolverStatus::Infeasible) {
    infeasibility["consensus_status"] = "infeasible";
    infeasibility["refuted"] = !last->passed;
  }
  analysis["infeasibility_analysis"] = infeasibility;
  doc["problem_analysis"] = analysis;

  doc["input_verification"] = Json{{"num_inputs", r.num_inputs}, {"issues", Json::array()}};

  Json cviol = Json::array();
  Json bviol = Json::array();
  if (last && last->report) {
    cviol = last->report->json["constraint_violations"];
    bviol = last->report->json["bound_violations"];
  }
  doc["constraint_violations"] = cviol;
  doc["bound_violations"] = bviol;

  Json ov = Json::object();
  ov["optimizer_value"] = number_or_null(last ? last->consensus.objective_value : std::nullopt);
  ov["simulator_value"] =
      has_verdict ? number_or_null(last->verdict->objective) : Json(nullptr);
  ov["difference"] = has_verdict ? number_or_null(last->outcome.difference) : Json(nullptr);
  ov["tolerance"] = has_verdict ? Json(last->outcome.delta) : Json(nullptr);
  ov["match"] = has_verdict && last->outcome.passed;
  doc["objective_verification"] = ov;

  Json history = Json::array();
  for (const auto& rec : r.history) {
    history.push_back(Json{{"iteration", rec.iteration},
                           {"passed", rec.passed},
                           {"issues_found", rec.issues_found},
                           {"fixes_applied", rec.fixes_applied}});
  }
  doc["validation_history"] = history;
  return doc;
}

}  // namespace execopt
