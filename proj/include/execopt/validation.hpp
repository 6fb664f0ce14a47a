#pragma once

// Cross-checks a consensus solution against a simulator and drives the
// bounded refine-and-retry loop around the optimizer ensemble.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "execopt/consensus.hpp"
#include "execopt/decision_model.hpp"
#include "execopt/expr.hpp"
#include "execopt/instance.hpp"
#include "execopt/providers.hpp"

namespace execopt {

struct ConstraintViolation {
  std::size_t constraint_index = 0;
  std::string expression;
  std::string description;
  std::vector<std::pair<std::string, long long>> bindings;
  double lhs = 0.0;
  double rhs = 0.0;
  expr::CompareOp op = expr::CompareOp::Le;
};

// A value outside its variable's type domain (non-integral INTEGER, BINARY
// not in {0, 1}).
struct BoundViolation {
  std::string variable;
  double value = 0.0;
  std::string rule;
};

struct SimulatorVerdict {
  bool feasible = false;
  double objective = 0.0;  // +inf when infeasible
  std::vector<ConstraintViolation> violations;
  std::vector<BoundViolation> bound_violations;
};

// Evaluates every constraint and, when feasible, the objective. Throws
// MissingVariable when the assignment does not cover every instantiated
// variable; evaluation errors propagate.
SimulatorVerdict simulate(const DecisionProcess& p, const std::map<std::string, double>& assignment,
                          const IndexSets& index_sets = {});

class Simulator {
 public:
  virtual ~Simulator() = default;
  virtual SimulatorVerdict run(const std::map<std::string, double>& assignment) = 0;
  virtual std::string id() const = 0;
};

// The simulator derived from the formulation itself.
class ExpressionSimulator final : public Simulator {
 public:
  ExpressionSimulator(DecisionProcess p, IndexSets index_sets = {})
      : process_(std::move(p)), index_sets_(std::move(index_sets)) {}
  SimulatorVerdict run(const std::map<std::string, double>& assignment) override {
    return simulate(process_, assignment, index_sets_);
  }
  std::string id() const override { return "expression-simulator"; }

 private:
  DecisionProcess process_;
  IndexSets index_sets_;
};

struct ValidationConfig {
  double rtol = 1e-6;
  double atol = 1e-9;
  int max_iterations = 3;

  void validate() const;  // throws ConfigError
};

struct ValidationOutcome {
  bool passed = false;
  double delta = 0.0;       // atol + rtol·|f_opt|
  double difference = 0.0;  // |F_sim − f_opt|, +inf when infeasible
};

// V = feasible ∧ |F_sim − f_opt| ≤ δ.
ValidationOutcome validate(double f_opt, const SimulatorVerdict& verdict, const ValidationConfig& cfg);

struct DiscrepancyReport {
  std::string text;
  Json json;
  std::vector<std::string> issues;  // one line per problem, same order as text
};

// Describes why a consensus result failed validation. Stable ordering:
// status problem, constraint violations (constraint order, then binding
// order), bound violations, objective mismatch.
DiscrepancyReport discrepancy_report(const DecisionProcess& p, SolverStatus status,
                                     const std::optional<SimulatorVerdict>& verdict,
                                     std::optional<double> f_opt, const ValidationConfig& cfg,
                                     const std::optional<std::string>& status_detail = {});

// ---------------------------------------------------------------------------
// Simulator gate

struct UnitCheck {
  std::string name;
  std::map<std::string, double> assignment;
  std::optional<bool> expect_feasible;
  std::optional<double> expect_objective;
};

Json unit_check_to_json(const UnitCheck& c);
UnitCheck unit_check_from_json(const Json& j);

// All instantiated variables at zero, with no expectation attached.
std::vector<UnitCheck> default_unit_checks(const DecisionProcess& p, const IndexSets& index_sets = {});

struct GateResult {
  bool passed = false;
  std::vector<std::string> diagnostics;
  // Name of a check whose assignment the simulator found feasible; a witness
  // that the problem is not infeasible.
  std::optional<std::string> feasible_witness;
};

GateResult simulator_gate(Simulator& sim, const std::vector<UnitCheck>& checks,
                          const ValidationConfig& cfg);

// ---------------------------------------------------------------------------
// Refinement loop

struct IterationRecord {
  int iteration = 0;  // 0-based
  std::vector<DriverOutput> outputs;  // one per variant, variant order
  ConsensusResult consensus;
  std::optional<SimulatorVerdict> verdict;
  ValidationOutcome outcome;
  bool passed = false;
  std::vector<std::string> issues_found;
  std::vector<std::string> fixes_applied;
  std::optional<DiscrepancyReport> report;
};

struct ValidationReport {
  bool passed = false;
  std::vector<IterationRecord> history;
  int num_inputs = 0;
};

Json validation_report_to_json(const ValidationReport& r);

struct LoopInputs {
  const DecisionProcess* process = nullptr;
  std::vector<std::shared_ptr<OptimizerDriver>> drivers;  // one per variant
  Simulator* simulator = nullptr;
  ConsensusConfig consensus;
  ValidationConfig validation;
  OptimizerTask task_template;  // process, solvers, examples, run id
  // A feasible point known from the gate; refutes an infeasibility claim.
  std::optional<std::string> feasible_witness;
  // Called after each iteration, e.g. to persist it.
  std::function<void(const IterationRecord&)> on_iteration;
};

std::string variant_name(int index);  // "variant_1", ...

// Runs the ensemble, validates the consensus, and feeds the discrepancy
// report back until validation passes or max_iterations invocations are
// spent. Driver exceptions become Error runs.
ValidationReport refinement_loop(const LoopInputs& in);

}  // namespace execopt
