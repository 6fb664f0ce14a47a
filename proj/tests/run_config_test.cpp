#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>

#include "execopt/errors.hpp"
#include "execopt/hashing.hpp"
#include "execopt/run_config.hpp"
#include "test_support.hpp"

using namespace execopt;
using execopt::testing::fixture;

namespace {

Json food_doc() { return Json::parse(read_file(fixture("food/config.json"))); }

bool rejects(Json doc, const std::string& needle) {
  try {
    run_config_from_json(doc, fixture("food")).validate();
  } catch (const ConfigError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  } catch (const Error&) {
    return needle.empty();
  }
  return false;
}

}  // namespace

TEST_CASE("defaults follow the hyperparameter table") {
  RunConfig cfg;
  CHECK(cfg.mbr.num_candidates == 5);
  CHECK(cfg.mbr.top_q == 3);
  CHECK(cfg.mbr.weights.at("constraints") == 0.6);
  CHECK(cfg.mbr.weights.at("decision_variables") == 0.2);
  CHECK(cfg.retrieval.pool_size == 9);
  CHECK(cfg.retrieval.select_k == 3);
  CHECK(cfg.retrieval.lambda == 0.5);
  CHECK(cfg.retrieval.similarity_threshold == 0.6);
  CHECK(cfg.ensemble.num_variants == 3);
  CHECK(cfg.ensemble.rtol == 1e-6);
  CHECK(cfg.ensemble.atol == 1e-9);
  CHECK(cfg.validation.max_iterations == 3);
  CHECK(cfg.batch_size == 5);
}

TEST_CASE("food config loads with paths resolved") {
  const RunConfig cfg = load_run_config(fixture("food/config.json"));
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.memory_store.filename() == "store.jsonl");
  CHECK(std::filesystem::exists(cfg.memory_store));
  CHECK(std::filesystem::exists(cfg.llm.script));
  CHECK(cfg.retrieval.similarity_threshold == 0.2);
  CHECK(cfg.available_solvers.size() == 7);
}

TEST_CASE("unknown keys are named") {
  Json doc = food_doc();
  doc["mbr"]["nmu_candidates"] = 3;
  CHECK(rejects(doc, "mbr.nmu_candidates"));
  doc = food_doc();
  doc["extra"] = true;
  CHECK(rejects(doc, "'extra'"));
}

TEST_CASE("invalid values are rejected") {
  Json doc = food_doc();
  doc["mbr"]["top_q"] = 9;
  CHECK(rejects(doc, "top-q"));
  doc = food_doc();
  doc["providers"]["llm"]["type"] = "carrier-pigeon";
  CHECK(rejects(doc, "carrier-pigeon"));
  doc = food_doc();
  doc["providers"]["optimizer"]["faults"] = Json::array({Json::array({"explode"})});
  CHECK(rejects(doc, ""));
  doc = food_doc();
  doc["mbr"]["num_candidates"] = "five";
  CHECK(rejects(doc, "mbr.num_candidates"));
}

TEST_CASE("serialized config omits the run directory and reloads") {
  const RunConfig cfg = load_run_config(fixture("food/config.json"));
  const Json j = run_config_to_json(cfg);
  CHECK_FALSE(j.contains("run_dir"));
  const RunConfig again = run_config_from_json(j);
  CHECK(run_config_to_json(again).dump() == j.dump());
}

TEST_CASE("environment overrides switch to live providers") {
  RunConfig cfg = load_run_config(fixture("food/config.json"));
  setenv("EXECOPT_LLM_ENDPOINT", "http://localhost:1/v1/chat/completions", 1);
  setenv("EXECOPT_LLM_MODEL", "some-model", 1);
  apply_env_overrides(cfg);
  unsetenv("EXECOPT_LLM_ENDPOINT");
  unsetenv("EXECOPT_LLM_MODEL");
  CHECK(cfg.llm.type == "openai");
  CHECK(cfg.llm.model == "some-model");
  CHECK(cfg.llm.endpoint == "http://localhost:1/v1/chat/completions");
}
