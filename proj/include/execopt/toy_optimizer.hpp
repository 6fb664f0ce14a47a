#pragma once

// Brute-force optimizer over a small integer grid, plus drivers that wrap it
// with scripted faults for exercising consensus and validation.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "execopt/decision_model.hpp"
#include "execopt/instance.hpp"
#include "execopt/providers.hpp"

namespace execopt {

// Integer bounds per instantiated variable, read from a sidecar file:
//   {"bounds": {"x[1,2]": [0, 5], ...}, "default_bounds": [0, 0],
//    "index_sets": {"regions": [1, 2, 3]}, "discretize_continuous": false}
struct VariableDomain {
  std::map<std::string, std::pair<long long, long long>> bounds;
  std::optional<std::pair<long long, long long>> default_bounds;
  IndexSets index_sets;
  // Lets CONTINUOUS variables be enumerated on the integer grid.
  bool discretize_continuous = false;

  static VariableDomain from_json(const Json& doc);
  static VariableDomain load(const std::filesystem::path& path);
  Json to_json() const;
};

struct ToyOptions {
  std::size_t max_free_variables = 12;
  std::uint64_t max_grid_points = 10'000'000;
  bool parallel = true;
};

// Exhaustive search. Optimal with the lexicographically smallest optimal
// vector (variables in canonical order), Infeasible when no grid point is
// feasible, Error when the domain is unusable or a cap is exceeded (the
// reason goes to `diagnostic`).
SolverRun toy_optimize(const DecisionProcess& p, const VariableDomain& domain,
                       const ToyOptions& options = {}, std::string* diagnostic = nullptr);

class ToyDriver final : public OptimizerDriver {
 public:
  ToyDriver(VariableDomain domain, ToyOptions options = {})
      : domain_(std::move(domain)), options_(options) {}
  DriverOutput run(const OptimizerTask& task) override;
  std::string id() const override { return "toy-bruteforce"; }

 private:
  VariableDomain domain_;
  ToyOptions options_;
};

struct Fault {
  enum class Kind { DropConstraint, FlipObjectiveSign, PerturbObjective, ReportStatus };
  Kind kind = Kind::DropConstraint;
  std::size_t constraint = 0;                       // DropConstraint
  double epsilon = 0.0;                             // PerturbObjective
  SolverStatus status = SolverStatus::Infeasible;   // ReportStatus
  // Number of discrepancy reports mentioning the fault before it heals;
  // nullopt never heals.
  std::optional<int> heals_after = 1;

  // "drop-constraint(0)", "flip-objective-sign", "perturb-objective(0.5)",
  // "report-status(infeasible)", optionally followed by "@N" or "@never".
  static Fault parse(std::string_view text);
  std::string describe() const;
  // True when a discrepancy report names this fault's symptom.
  bool mentioned_in(const Json& report) const;
};

class FaultyDriver final : public OptimizerDriver {
 public:
  FaultyDriver(VariableDomain domain, ToyOptions options, std::vector<Fault> faults);
  DriverOutput run(const OptimizerTask& task) override;
  std::string id() const override { return "toy-bruteforce"; }

 private:
  VariableDomain domain_;
  ToyOptions options_;
  std::vector<Fault> faults_;
  std::mutex mu_;
  std::vector<int> mentions_;
  std::vector<bool> healed_;
};

// One driver per entry of `faults_per_variant`; an empty list gives a
// plain toy driver.
std::vector<std::shared_ptr<OptimizerDriver>> faulty_optimize_variants(
    const VariableDomain& domain, const ToyOptions& options,
    const std::vector<std::vector<Fault>>& faults_per_variant);

}  // namespace execopt
