#pragma once

// Self-consistency over T optimizer variant runs: status vote, tolerance
// clustering of objectives, lower median of the largest cluster, and the
// fastest run achieving it.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "execopt/decision_model.hpp"

namespace execopt {

struct ConsensusConfig {
  int num_variants = 3;
  double rtol = 1e-6;
  double atol = 1e-9;
  Direction direction = Direction::Minimize;

  void validate() const;  // throws ConfigError
};

// |a − b| ≤ atol + rtol·|b|, with b as the reference.
bool objective_similar(double a, double b, const ConsensusConfig& cfg);
// Holds with either operand as the reference.
bool objective_similar_symmetric(double a, double b, const ConsensusConfig& cfg);

// Most frequent status; ties go to the status that comes first in
// Optimal, TimeLimit, Infeasible, Unbounded, Error.
SolverStatus status_consensus(const std::vector<SolverRun>& runs);

struct ObjectiveCluster {
  std::vector<std::pair<std::string, double>> members;  // ascending by value
};

// Sort ascending (ties by variant name), then sweep: a value joins the
// current cluster iff it is similar to that cluster's maximum.
std::vector<ObjectiveCluster> cluster_objectives(std::vector<std::pair<std::string, double>> values,
                                                 const ConsensusConfig& cfg);

struct VariantSummary {
  std::string variant_name;
  std::string solver;
  SolverStatus status = SolverStatus::Error;
  std::optional<double> objective_value;
  double solve_time = 0.0;
};

struct ConsensusResult {
  std::map<std::string, double> variables;
  std::optional<double> objective_value;
  SolverStatus status = SolverStatus::Error;
  std::string achieving_variant;  // empty when no run was chosen
  int num_variants = 0;
  int num_successful = 0;
  int num_failed = 0;
  std::map<SolverStatus, int> status_distribution;  // nonzero entries only
  int solver_agreement = 0;       // runs sharing the consensus status
  int objective_agreement = 0;    // size of the chosen cluster
  double objective_agreement_ratio = 0.0;
  int num_unique_objectives = 0;  // cluster count
  std::vector<std::string> failed_variants;
  std::vector<std::string> solvers_used;       // every run, by variant name
  std::vector<std::string> consensus_solvers;  // runs in the chosen group
  std::vector<VariantSummary> variant_results;  // sorted by variant name
};

// `expected_variants` lists the T variant names; any without a run enters
// failed_variants as an Error. Runs claiming Optimal without an objective
// are demoted to Error. Result is independent of the order of `runs`.
ConsensusResult consensus(const std::vector<SolverRun>& runs, const ConsensusConfig& cfg,
                          const std::vector<std::string>& expected_variants = {});

// Ensemble output document (optimal_variables, optimal_objective_value,
// status, solver_info, consensus_info, variant_results).
Json consensus_to_json(const ConsensusResult& r);

}  // namespace execopt
