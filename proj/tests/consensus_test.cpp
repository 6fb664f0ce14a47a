#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "execopt/consensus.hpp"
#include "execopt/errors.hpp"
#include "oracles.hpp"

using namespace execopt;

namespace {

SolverRun run(std::string name, SolverStatus s, std::optional<double> obj, double t,
              std::string solver = "") {
  SolverRun r;
  r.variant_name = std::move(name);
  r.status = s;
  r.objective_value = obj;
  r.solve_time = t;
  r.solver_name = std::move(solver);
  r.variables = {{"tag", static_cast<double>(r.variant_name.size()) + t}};
  return r;
}

std::vector<SolverRun> food_variants() {
  return {run("variant_1", SolverStatus::Optimal, 8090.0, 0.0019, "Gurobi"),
          run("variant_2", SolverStatus::Optimal, 8090.00000015, 0.0359, "CVXPY (ECOS)"),
          run("variant_3", SolverStatus::Optimal, 8090.0, 0.0016, "OR-Tools (GLOP)")};
}

}  // namespace

TEST(ObjectiveSimilar, Examples) {
  ConsensusConfig cfg;
  EXPECT_TRUE(objective_similar(8090.0, 8090.00000015, cfg));
  EXPECT_TRUE(objective_similar(-3.25, -3.25, cfg));
  EXPECT_FALSE(objective_similar(1.0, 1.01, cfg));
}

TEST(ObjectiveSimilar, AsymmetricAtTheEdge) {
  ConsensusConfig cfg{3, 0.5, 0.0};
  // |1 - 2| <= 0.5*2 holds, |2 - 1| <= 0.5*1 does not.
  EXPECT_TRUE(objective_similar(1.0, 2.0, cfg));
  EXPECT_FALSE(objective_similar(2.0, 1.0, cfg));
  EXPECT_TRUE(objective_similar_symmetric(2.0, 1.0, cfg));
}

TEST(StatusConsensus, Examples) {
  auto s = [](std::vector<SolverStatus> st) {
    std::vector<SolverRun> runs;
    for (auto x : st) runs.push_back(run("v", x, 1.0, 0));
    return status_consensus(runs);
  };
  using S = SolverStatus;
  EXPECT_EQ(s({S::Optimal, S::Optimal, S::Optimal}), S::Optimal);
  EXPECT_EQ(s({S::Optimal, S::Infeasible}), S::Optimal);
  EXPECT_EQ(s({S::Error, S::Error, S::Optimal}), S::Error);
  EXPECT_EQ(s({S::Unbounded, S::TimeLimit}), S::TimeLimit);
}

TEST(ClusterObjectives, Examples) {
  ConsensusConfig cfg;
  auto one = cluster_objectives({{"a", 8090.0}, {"b", 8090.00000015}, {"c", 8090.0}}, cfg);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].members.size(), 3u);
  EXPECT_EQ(cluster_objectives({{"a", 1.0}, {"b", 2.0}, {"c", 3.0}}, cfg).size(), 3u);
  // 100.00005 joins 100 (5e-5 <= 1e-4); 100.0002 is 1.5e-4 from the max.
  auto two = cluster_objectives({{"a", 100.0}, {"b", 100.00005}, {"c", 100.0002}}, cfg);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].members.size(), 2u);
  ConsensusConfig loose{3, 1e-6, 1e-4};
  EXPECT_EQ(cluster_objectives({{"a", 100.0}, {"b", 100.00005}, {"c", 100.0002}}, loose).size(), 1u);
}

TEST(Consensus, FoodVariantsFieldForField) {
  ConsensusConfig cfg;
  const auto r = consensus(food_variants(), cfg, {"variant_1", "variant_2", "variant_3"});
  EXPECT_EQ(r.status, SolverStatus::Optimal);
  EXPECT_EQ(r.achieving_variant, "variant_3");
  const Json j = consensus_to_json(r);
  EXPECT_EQ(j["optimal_objective_value"].dump(), "8090.0");
  EXPECT_EQ(j["status"], "optimal");
  EXPECT_EQ(j["solver_info"].dump(),
            R"js({"ensemble_size":3,"solvers_used":["Gurobi","CVXPY (ECOS)","OR-Tools (GLOP)"],)js"
            R"js("consensus_solvers":["Gurobi","CVXPY (ECOS)","OR-Tools (GLOP)"]})js");
  EXPECT_EQ(j["consensus_info"].dump(),
            R"js({"num_variants":3,"num_successful":3,"num_failed":0,)js"
            R"js("status_distribution":{"optimal":3},"solver_agreement":3,)js"
            R"js("objective_agreement":3,"objective_agreement_ratio":1.0,)js"
            R"js("num_unique_objectives":1,"failed_variants":[]})js");
  ASSERT_EQ(j["variant_results"].size(), 3u);
  EXPECT_EQ(j["variant_results"][1].dump(),
            R"js({"variant_name":"variant_2","solver":"CVXPY (ECOS)","status":"optimal",)js"
            R"js("objective_value":8090.00000015,"solve_time":0.0359})js");
  EXPECT_EQ(j["variant_results"][2]["solve_time"].get<double>(), 0.0016);
}

TEST(Consensus, SingleRunVerbatim) {
  auto only = run("v", SolverStatus::Optimal, 12.5, 3.0);
  only.variables = {{"x", 1.0}, {"y", 2.5}};
  const auto r = consensus({only}, ConsensusConfig{1});
  EXPECT_EQ(r.variables, only.variables);
  EXPECT_EQ(r.objective_value, 12.5);
  EXPECT_EQ(r.num_unique_objectives, 1);
}

TEST(Consensus, LargestClusterFastestAchiever) {
  std::vector<SolverRun> runs = {run("a", SolverStatus::Optimal, 10, 0.5),
                                 run("b", SolverStatus::Optimal, 10, 0.2),
                                 run("c", SolverStatus::Optimal, 10, 0.9),
                                 run("d", SolverStatus::Optimal, 42, 0.1),
                                 run("e", SolverStatus::Optimal, 42, 0.05)};
  const auto r = consensus(runs, ConsensusConfig{5});
  EXPECT_EQ(r.objective_value, 10.0);
  EXPECT_EQ(r.achieving_variant, "b");
  EXPECT_EQ(r.objective_agreement, 3);
  EXPECT_DOUBLE_EQ(r.objective_agreement_ratio, 0.6);
  EXPECT_EQ(r.num_unique_objectives, 2);
}

TEST(Consensus, EvenClusterUsesLowerMedian) {
  std::vector<SolverRun> runs = {run("a", SolverStatus::Optimal, 5.0, 1),
                                 run("b", SolverStatus::Optimal, 5.000001, 1),
                                 run("c", SolverStatus::Optimal, 5.000002, 1),
                                 run("d", SolverStatus::Optimal, 5.000003, 1)};
  const auto r = consensus(runs, ConsensusConfig{4, 1e-6, 1e-9});
  ASSERT_EQ(r.num_unique_objectives, 1);
  EXPECT_EQ(r.objective_value, 5.000001);
  EXPECT_EQ(r.achieving_variant, "b");
}

TEST(Consensus, SizeTieFollowsDirection) {
  std::vector<SolverRun> runs = {run("a", SolverStatus::Optimal, 1, 1),
                                 run("b", SolverStatus::Optimal, 2, 1)};
  ConsensusConfig cfg{2};
  EXPECT_EQ(consensus(runs, cfg).objective_value, 1.0);
  cfg.direction = Direction::Maximize;
  EXPECT_EQ(consensus(runs, cfg).objective_value, 2.0);
}

TEST(Consensus, MissingAndDemotedRunsAreErrors) {
  std::vector<SolverRun> runs = {run("variant_1", SolverStatus::Optimal, std::nullopt, 1),
                                 run("variant_2", SolverStatus::Optimal, 7.0, 1)};
  const auto r = consensus(runs, ConsensusConfig{3}, {"variant_1", "variant_2", "variant_3"});
  EXPECT_EQ(r.status, SolverStatus::Error);
  EXPECT_FALSE(r.objective_value);
  EXPECT_TRUE(r.variables.empty());
  EXPECT_EQ(r.failed_variants, (std::vector<std::string>{"variant_1", "variant_3"}));
  EXPECT_EQ(r.num_successful, 1);
  EXPECT_EQ(r.status_distribution.at(SolverStatus::Error), 2);
}

TEST(Consensus, NonSolutionStatusHasNoVariables) {
  std::vector<SolverRun> runs = {run("a", SolverStatus::Infeasible, std::nullopt, 1),
                                 run("b", SolverStatus::Infeasible, std::nullopt, 1),
                                 run("c", SolverStatus::Optimal, 3.0, 1)};
  const auto r = consensus(runs, ConsensusConfig{3});
  EXPECT_EQ(r.status, SolverStatus::Infeasible);
  EXPECT_TRUE(r.variables.empty());
  EXPECT_EQ(consensus_to_json(r)["optimal_objective_value"], nullptr);
}

TEST(Consensus, RandomMultisetsAgreeWithOracle) {
  std::mt19937_64 rng(20261016);
  const double pool[] = {10.0, 10.000001, 10.0000105, 10.00002, 42.0,
                         42.00004, -7.0, -7.000000005, 0.0, 1e-10};
  const SolverStatus st[] = {SolverStatus::Optimal, SolverStatus::Optimal, SolverStatus::Optimal,
                             SolverStatus::TimeLimit, SolverStatus::Infeasible,
                             SolverStatus::Unbounded, SolverStatus::Error};
  std::uniform_int_distribution<int> pick_n(1, 7), pick_v(0, 9), pick_s(0, 6), pick_t(0, 3);
  std::bernoulli_distribution no_obj(0.05), maximize(0.5);
  int solved = 0;
  for (int trial = 0; trial < 12000; ++trial) {
    const int n = pick_n(rng);
    ConsensusConfig cfg{n};
    if (maximize(rng)) cfg.direction = Direction::Maximize;
    std::vector<SolverRun> runs;
    for (int i = 0; i < n; ++i) {
      std::optional<double> obj = pool[pick_v(rng)];
      if (no_obj(rng)) obj.reset();
      runs.push_back(run("v" + std::to_string(i), st[pick_s(rng)], obj, pick_t(rng) * 0.5));
      runs.back().variables = {{"who", static_cast<double>(i)}};
    }
    const auto want = oracle::consensus(runs, cfg);
    ASSERT_EQ(want.valid_splits, 1);
    auto shuffled = runs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto got = consensus(shuffled, cfg);
    ASSERT_EQ(got.status, want.status) << "trial " << trial;
    ASSERT_EQ(got.objective_value, want.objective) << "trial " << trial;
    ASSERT_EQ(got.achieving_variant, want.achiever) << "trial " << trial;
    if (want.objective) {
      ++solved;
      ASSERT_EQ(got.num_unique_objectives, want.clusters);
      ASSERT_EQ(got.objective_agreement, want.agreement);
      const int who = std::stoi(want.achiever.substr(1));
      ASSERT_EQ(got.variables, runs[who].variables);
      ASSERT_GE(got.objective_agreement_ratio, 0.0);
      ASSERT_LE(got.objective_agreement_ratio, 1.0);
    }
    ASSERT_EQ(consensus_to_json(got).dump(), consensus_to_json(consensus(runs, cfg)).dump());
  }
  EXPECT_GT(solved, 5000);
}

TEST(ConsensusConfig, Validation) {
  EXPECT_THROW((ConsensusConfig{0}.validate()), ConfigError);
  EXPECT_THROW((ConsensusConfig{1, -1.0}.validate()), ConfigError);
  EXPECT_NO_THROW(ConsensusConfig{}.validate());
}
