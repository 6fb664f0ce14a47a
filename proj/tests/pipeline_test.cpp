#include <gtest/gtest.h>

#include <chrono>

#include "execopt/errors.hpp"
#include "execopt/hashing.hpp"
#include "execopt/mock_providers.hpp"
#include "execopt/pipeline.hpp"
#include "test_support.hpp"

using namespace execopt;
using execopt::testing::fixture;
using execopt::testing::scratch_dir;

namespace fs = std::filesystem;

namespace {

RunConfig food_config(const fs::path& run_dir) {
  RunConfig cfg = load_run_config(fixture("food/config.json"));
  cfg.run_dir = run_dir;
  return cfg;
}

std::string food_problem() { return read_file(fixture("food/problem.txt")); }

}  // namespace

TEST(Pipeline, FoodEndToEnd) {
  const auto dir = scratch_dir("pipeline_food");
  auto cfg = food_config(dir);
  auto providers = make_providers(cfg);
  const auto start = std::chrono::steady_clock::now();
  const auto r = solve(food_problem(), cfg, providers);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_TRUE(r.completed) << r.failed_stage << ": " << r.error;
  EXPECT_LT(secs, 10.0);
  EXPECT_EQ(r.selected_candidate, 5);
  EXPECT_EQ(r.consensus->status, SolverStatus::Optimal);
  EXPECT_EQ(r.consensus->objective_value, 8090.0);
  EXPECT_EQ(r.consensus->variables, execopt::testing::food_optimum());
  ASSERT_TRUE(r.validation_passed());
  EXPECT_EQ(r.validation->history.size(), 1u);
  EXPECT_EQ(r.validation->history[0].outcome.difference, 0.0);
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_EQ(r.recommendations.front().solver, "gurobipy");

  for (const char* f : {"problem.txt", "config.json", "stages.json", "result.json",
                        "providers/exchanges.jsonl", "examples/index.json",
                        "extraction/candidates.json", "extraction/mbr.json", "extraction/judge.json",
                        "extraction/selected.json", "recommendation/solvers.json",
                        "validation/simulator_gate.json", "validation/validation_results.json",
                        "optimizer_runs/ensemble.json", "optimizer_runs/iteration_0/variant_1.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const Json result = Json::parse(read_file(dir / "result.json"));
  EXPECT_EQ(result["objective_value"].dump(), "8090.0");
  EXPECT_EQ(result["status"], "optimal");
  const Json vr = Json::parse(read_file(dir / "validation/validation_results.json"));
  EXPECT_EQ(vr["passed"], true);
  EXPECT_EQ(vr["num_validation_iterations"], 1);
  EXPECT_EQ(vr["objective_verification"]["difference"].dump(), "0.0");
  const Json mbr = Json::parse(read_file(dir / "extraction/mbr.json"));
  std::vector<int> top = mbr["top_q"].get<std::vector<int>>();
  std::sort(top.begin(), top.end());
  EXPECT_EQ(top, (std::vector<int>{2, 3, 5}));
  const Json examples = Json::parse(read_file(dir / "examples/index.json"));
  EXPECT_FALSE(examples.empty());
}

TEST(Pipeline, ReplayIsByteIdentical) {
  const auto dir = scratch_dir("pipeline_replay_src");
  const auto out = scratch_dir("pipeline_replay_out");
  auto cfg = food_config(dir);
  auto providers = make_providers(cfg);
  ASSERT_TRUE(solve(food_problem(), cfg, providers).completed);
  const auto again = replay_run(dir, out);
  EXPECT_TRUE(again.completed);
  EXPECT_EQ(hash_directory(dir), hash_directory(out));
  EXPECT_THROW(replay_run(dir, dir), ConfigError);
}

TEST(Pipeline, EmptyProblemFailsExtraction) {
  const auto dir = scratch_dir("pipeline_empty");
  auto cfg = food_config(dir);
  auto providers = make_providers(cfg);
  const auto r = solve("", cfg, providers);
  EXPECT_FALSE(r.completed);
  EXPECT_EQ(r.failed_stage, "extraction");
  EXPECT_EQ(r.exit_code(), 3);
  const Json j = Json::parse(read_file(dir / "result.json"));
  EXPECT_EQ(j["failed_stage"], "extraction");
  EXPECT_EQ(j["error"]["code"], "SchemaViolation");
}

TEST(Pipeline, OutageLeavesPartialBundleThenResumes) {
  const auto dir = scratch_dir("pipeline_outage");
  auto cfg = food_config(dir);
  auto broken = make_providers(cfg);
  broken.llm = std::make_shared<RecordingLlm>(std::make_shared<UnconfiguredLlm>(), broken.log);
  const auto failed = solve(food_problem(), cfg, broken);
  EXPECT_FALSE(failed.completed);
  EXPECT_EQ(failed.failed_stage, "extraction");
  EXPECT_EQ(failed.error_code, "ProviderUnavailable");
  EXPECT_EQ(failed.completed_stages, (std::vector<std::string>{"retrieval"}));
  EXPECT_TRUE(fs::exists(dir / "examples/index.json"));
  EXPECT_TRUE(fs::exists(dir / "result.json"));
  const auto index_before = read_file(dir / "examples/index.json");

  auto fixed = make_providers(cfg);
  const auto resumed = solve(food_problem(), cfg, fixed, SolveOptions{true});
  ASSERT_TRUE(resumed.completed) << resumed.error;
  EXPECT_EQ(resumed.consensus->objective_value, 8090.0);
  EXPECT_EQ(read_file(dir / "examples/index.json"), index_before);
  // Retrieval was not redone. The log carries over the first attempt, so the
  // problem text shows up embedded exactly once.
  const std::string problem = food_problem();
  int embeds = 0;
  for (const auto& e : fixed.log->entries()) embeds += e.kind == "embed" && e.prompt == problem;
  EXPECT_EQ(embeds, 1);
}

TEST(Pipeline, FailedRunReplaysIdentically) {
  const auto dir = scratch_dir("pipeline_failed_src");
  const auto out = scratch_dir("pipeline_failed_out");
  auto cfg = food_config(dir);
  auto providers = make_providers(cfg);
  ASSERT_FALSE(solve("", cfg, providers).completed);
  replay_run(dir, out);
  EXPECT_EQ(hash_directory(dir), hash_directory(out));
}

TEST(Pipeline, ExtractJsonObject) {
  EXPECT_EQ(extract_json_object("```json\n{\"a\": {\"b\": 1}}\n```\nthanks"), "{\"a\": {\"b\": 1}}");
  EXPECT_THROW(extract_json_object("no json here"), MalformedDocument);
}

TEST(Pipeline, RunIdIsStable) {
  EXPECT_EQ(run_id_for("p", 0), run_id_for("p", 0));
  EXPECT_NE(run_id_for("p", 0), run_id_for("p", 1));
  EXPECT_EQ(run_id_for("p", 0).size(), 13u);
}

TEST(Pipeline, ToySuiteAccuracy) {
  auto cfg = load_run_config(fixture("toy_suite/config.json"));
  cfg.run_dir = scratch_dir("pipeline_suite");
  const auto suite = load_suite(fixture("toy_suite/suite.jsonl"));
  const auto r = run_suite(suite, make_suite_pipeline(cfg), cfg.batch_size);
  // chairs 18, contradiction verified infeasible, knapsack 9, shifts 6 are
  // right; the mislabeled knapsack (ground truth 8) is not.
  EXPECT_EQ(r.correct, 4u);
  EXPECT_EQ(r.total, 5u);
  EXPECT_EQ(r.accuracy, 0.8);
  EXPECT_EQ(r.records[1].exception_rule, ExceptionRule::VerifiedInfeasibility);
  EXPECT_EQ(r.records[3].instance_id, "knapsack_mislabeled");
  EXPECT_EQ(r.records[3].predicted, "9.0");
  EXPECT_DOUBLE_EQ(*r.records[3].relative_error, 1.0 / (8.0 + 1e-8));
}
