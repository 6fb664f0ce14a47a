#pragma once

// End-to-end solve: retrieval → extraction → MBR selection and judge →
// solver recommendation → optimizer ensemble with consensus and validation.
// Every stage persists its artifacts under the run directory (layout in
// docs/artifacts.md) and every provider exchange is logged for replay.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "execopt/consensus.hpp"
#include "execopt/eval_harness.hpp"
#include "execopt/providers.hpp"
#include "execopt/run_config.hpp"
#include "execopt/solver_recommender.hpp"
#include "execopt/validation.hpp"

namespace execopt {

inline constexpr const char* kStages[] = {"retrieval", "extraction", "selection", "recommendation",
                                          "validation"};

struct ProviderSet {
  std::shared_ptr<LlmProvider> llm;
  std::shared_ptr<EmbeddingProvider> embedder;
  std::vector<std::shared_ptr<OptimizerDriver>> drivers;  // one per variant
  std::shared_ptr<ExchangeLog> log;
};

// Providers described by `cfg`, with retries and recording into a fresh log.
ProviderSet make_providers(const RunConfig& cfg);

// Providers answering only from `recorded`; exchanges are re-recorded into a
// fresh log so the replayed run directory carries the same log.
ProviderSet make_replay_providers(const RunConfig& cfg, const ExchangeLog& recorded);

// Extractor prompt with the problem and retrieved formulations.
std::string render_extract_prompt(std::string_view problem,
                                  const std::vector<std::string>& example_formulations);

// Pulls the JSON object out of a model reply (code fences and chatter
// around it are ignored). Throws MalformedDocument.
std::string extract_json_object(std::string_view reply);

struct SolveOptions {
  bool resume = false;  // reuse artifacts of stages already completed
};

struct SolveResult {
  std::string run_id;
  bool completed = false;
  std::string failed_stage;
  std::string error_code;
  std::string error;
  std::vector<std::string> completed_stages;
  int selected_candidate = 0;
  std::optional<DecisionProcess> selected;
  std::vector<SolverRecommendation> recommendations;
  std::optional<GateResult> gate;
  std::optional<ConsensusResult> consensus;
  std::optional<ValidationReport> validation;

  bool validation_passed() const { return validation && validation->passed; }
  // 0 validated, 2 validation failed, 3 stage error.
  int exit_code() const;
  Json to_json() const;
};

std::string run_id_for(std::string_view problem, std::uint64_t seed);

// Runs the stage graph into cfg.run_dir. Stage failures are captured in the
// result (and result.json), never thrown; ConfigError is thrown.
SolveResult solve(const std::string& problem, const RunConfig& cfg, ProviderSet& providers,
                  const SolveOptions& options = {});

// Re-executes the run stored in `source` into `target` using only its
// recorded exchanges.
SolveResult replay_run(const std::filesystem::path& source, const std::filesystem::path& target);

PipelineOutput pipeline_output(const SolveResult& r);

// eval-harness Pipeline that solves each instance into
// <cfg.run_dir>/instances/<id> with freshly built providers.
Pipeline make_suite_pipeline(const RunConfig& cfg);

}  // namespace execopt
