#pragma once

// Scores pipeline outputs against ground truth with the relative-error
// criterion and builds benchmark reports.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "execopt/decision_model.hpp"

namespace execopt {

inline constexpr double kScoreEpsilon = 1e-8;
inline constexpr double kScoreThreshold = 1e-6;

struct Score {
  bool correct = false;
  double relative_error = 0.0;
};

// |predicted − gt| / (|gt| + ε) < 1e-6, strict.
Score score(double predicted, double gt, double epsilon = kScoreEpsilon);

struct BenchmarkInstance {
  std::string id;
  std::string description;
  std::optional<double> ground_truth;  // nullopt: the instance is infeasible
  std::vector<std::string> tags;
};

std::vector<BenchmarkInstance> parse_suite(std::string_view jsonl);
std::vector<BenchmarkInstance> load_suite(const std::filesystem::path& path);

// What a pipeline run reports for one instance.
struct PipelineOutput {
  SolverStatus status = SolverStatus::Error;
  std::optional<double> objective;
  bool validation_passed = false;
  bool has_integer_structure = false;
  // Infeasibility evidence: the simulator passed its gate and no unit check
  // point was feasible.
  bool gate_passed = false;
  bool feasible_witness = false;
  std::string error;  // non-empty when the pipeline failed
};

enum class ExceptionRule { None, VerifiedInfeasibility };
std::string_view to_string(ExceptionRule r);

struct ScoreRecord {
  std::string instance_id;
  std::string predicted;  // number text or status name
  bool correct = false;
  std::optional<double> relative_error;
  ExceptionRule exception_rule = ExceptionRule::None;
  std::vector<std::string> review_flags;  // "units", "relaxation"
  std::string note;
  double wall_time = 0.0;
};

ScoreRecord score_with_exceptions(const PipelineOutput& out, const BenchmarkInstance& instance);

using Pipeline = std::function<PipelineOutput(const BenchmarkInstance&)>;

struct SuiteReport {
  std::vector<ScoreRecord> records;  // sorted by instance id
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
  double wall_time_total = 0.0;
  double wall_time_mean = 0.0;
  double wall_time_max = 0.0;

  std::string accuracy_fraction() const;  // reduced "p/q"
};

// Scores every instance with up to `parallelism` concurrent pipeline runs.
// A throwing pipeline counts as incorrect with the error noted. Throws
// EmptySuite for no instances.
SuiteReport run_suite(const std::vector<BenchmarkInstance>& instances, const Pipeline& pipeline,
                      std::size_t parallelism);

// `timings` off leaves wall-time fields out, for byte-stable reports.
Json suite_report_to_json(const SuiteReport& r, bool timings = true);
std::string suite_report_text(const SuiteReport& r);

}  // namespace execopt
