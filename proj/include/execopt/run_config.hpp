#pragma once

// Run configuration: pipeline hyperparameters, provider selection and
// paths. Loaded from JSON (schema in docs/artifacts.md) with environment
// overrides for endpoints and credentials.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "execopt/consensus.hpp"
#include "execopt/mbr.hpp"
#include "execopt/memory_store.hpp"
#include "execopt/providers.hpp"
#include "execopt/toy_optimizer.hpp"
#include "execopt/validation.hpp"

namespace execopt {

struct LlmSettings {
  std::string type = "scripted";  // scripted | openai | none
  std::filesystem::path script;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "EXECOPT_LLM_API_KEY";
};

struct EmbedderSettings {
  std::string type = "hashing";  // hashing | openai
  std::size_t dimension = 256;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "EXECOPT_EMBED_API_KEY";
};

struct OptimizerSettings {
  std::string type = "toy";  // toy | http
  std::filesystem::path domain;
  std::vector<std::vector<std::string>> faults;  // per variant, Fault::parse syntax
  std::size_t max_free_variables = 12;
  std::uint64_t max_grid_points = 10'000'000;
  std::string endpoint;
};

struct RunConfig {
  MbrConfig mbr;
  RetrievalConfig retrieval;
  ConsensusConfig ensemble;
  ValidationConfig validation;
  std::size_t batch_size = 5;
  std::uint64_t seed = 0;

  LlmSettings llm;
  EmbedderSettings embedder;
  OptimizerSettings optimizer;
  std::filesystem::path simulator_checks;  // optional JSON list of unit checks
  std::filesystem::path memory_store;      // optional store file
  std::vector<std::string> available_solvers = {"toy-bruteforce"};
  RetryPolicy retry;
  std::size_t max_in_flight = 8;

  std::filesystem::path run_dir = "runs/latest";

  // Checks every module's invariants; throws ConfigError.
  void validate() const;
};

// Relative paths are resolved against `base_dir`. Unknown keys are errors.
RunConfig run_config_from_json(const Json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
Json run_config_to_json(const RunConfig& cfg);

// EXECOPT_LLM_ENDPOINT, EXECOPT_LLM_MODEL, EXECOPT_EMBED_ENDPOINT,
// EXECOPT_EMBED_MODEL, EXECOPT_AGENT_ENDPOINT.
void apply_env_overrides(RunConfig& cfg);

}  // namespace execopt
