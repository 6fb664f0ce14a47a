#include <gtest/gtest.h>

#include <random>

#include "execopt/errors.hpp"
#include "execopt/hashing.hpp"
#include "execopt/toy_optimizer.hpp"
#include "execopt/validation.hpp"
#include "test_support.hpp"

using namespace execopt;
using execopt::testing::fixture;
using execopt::testing::knapsack_process;

namespace {

VariableDomain box(std::map<std::string, std::pair<long long, long long>> b) {
  VariableDomain d;
  d.bounds = std::move(b);
  return d;
}

std::string linear(const std::vector<int>& coef) {
  std::string s;
  for (std::size_t i = 0; i < coef.size(); ++i) {
    if (i) s += " + ";
    s += "(" + std::to_string(coef[i]) + ")*v" + std::to_string(i + 1);
  }
  return s;
}

struct RandomModel {
  DecisionProcess process;
  std::vector<std::pair<long long, long long>> bounds;
};

RandomModel random_model(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nvars(1, 4), ncons(0, 3), coef(-4, 5), lo(-2, 1), width(0, 3),
      rhs(-3, 8);
  const int n = nvars(rng);
  Json doc = {{"problem_description", "random"}};
  Json vars = Json::array();
  RandomModel m;
  for (int i = 1; i <= n; ++i) {
    vars.push_back({{"name", "v" + std::to_string(i)}, {"type", "INTEGER"}});
    const long long l = lo(rng);
    m.bounds.push_back({l, l + width(rng)});
  }
  doc["decision_variables"] = vars;
  auto coefs = [&] {
    std::vector<int> c;
    for (int i = 0; i < n; ++i) c.push_back(coef(rng));
    return c;
  };
  doc["objective_function"] = {{"direction", rng() % 2 ? "maximize" : "minimize"},
                               {"expression", linear(coefs())}};
  Json cons = Json::array();
  const int k = ncons(rng);
  for (int c = 0; c < k; ++c) {
    const char* op = rng() % 3 == 0 ? " >= " : " <= ";
    cons.push_back({{"expression", linear(coefs()) + op + std::to_string(rhs(rng))}});
  }
  doc["constraints"] = cons;
  m.process = execopt::testing::sparse_process(doc.dump());
  return m;
}

// Independent reference: odometer counting from the last variable downward,
// scored with the expression simulator.
std::optional<std::pair<double, std::vector<double>>> oracle(const RandomModel& m) {
  const std::size_t n = m.bounds.size();
  std::vector<long long> cur(n);
  for (std::size_t i = 0; i < n; ++i) cur[i] = m.bounds[i].second;
  const bool maximize = m.process.objective_function.direction == Direction::Maximize;
  std::optional<std::pair<double, std::vector<double>>> best;
  while (true) {
    std::map<std::string, double> a;
    std::vector<double> vec;
    for (std::size_t i = 0; i < n; ++i) {
      a["v" + std::to_string(i + 1)] = static_cast<double>(cur[i]);
      vec.push_back(static_cast<double>(cur[i]));
    }
    const auto v = simulate(m.process, a);
    if (v.feasible) {
      const bool better = !best || (maximize ? v.objective > best->first : v.objective < best->first);
      const bool tie = best && v.objective == best->first && vec < best->second;
      if (better || tie) best = {{v.objective, vec}};
    }
    std::size_t i = 0;
    while (i < n && cur[i] == m.bounds[i].first) {
      cur[i] = m.bounds[i].second;
      ++i;
    }
    if (i == n) break;
    --cur[i];
  }
  return best;
}

}  // namespace

TEST(ToyOptimize, KnapsackOptimum) {
  const auto run = toy_optimize(knapsack_process(), box({{"a", {0, 3}}, {"b", {0, 3}}}));
  ASSERT_EQ(run.status, SolverStatus::Optimal);
  // Enumerating all 16 points: (3,0) gives 9, (0,2) gives 8.
  EXPECT_EQ(run.objective_value, 9.0);
  EXPECT_EQ(run.variables, (std::map<std::string, double>{{"a", 3.0}, {"b", 0.0}}));
  EXPECT_EQ(run.iterations, 16);
  EXPECT_EQ(run.solver_name, "toy-bruteforce");
}

TEST(ToyOptimize, ContradictionIsInfeasible) {
  auto p = execopt::testing::sparse_process(R"js({"problem_description": "none",
    "decision_variables": [{"name": "x", "type": "INTEGER"}],
    "objective_function": {"direction": "minimize", "expression": "x"},
    "constraints": [{"expression": "x >= 1"}, {"expression": "x <= 0"}]})js");
  EXPECT_EQ(toy_optimize(p, box({{"x", {0, 5}}})).status, SolverStatus::Infeasible);
}

TEST(ToyOptimize, ThirtyVariablesExceedCap) {
  auto p = execopt::testing::sparse_process(R"js({"problem_description": "wide",
    "decision_variables": [{"name": "x", "type": "BINARY"}],
    "objective_function": {"direction": "maximize", "expression": "sum(x[i] for i in items)"},
    "constraints": [{"expression": "x[i] <= 1 for all i in items"}]})js");
  VariableDomain d;
  d.default_bounds = {0, 1};
  for (long long i = 1; i <= 30; ++i) d.index_sets["items"].push_back(i);
  std::string why;
  const auto run = toy_optimize(p, d, {}, &why);
  EXPECT_EQ(run.status, SolverStatus::Error);
  EXPECT_EQ(why.rfind("CapExceeded", 0), 0u) << why;
}

TEST(ToyOptimize, ContinuousNeedsOptIn) {
  auto d = VariableDomain::load(fixture("food/domain.json"));
  d.discretize_continuous = false;
  EXPECT_EQ(toy_optimize(execopt::testing::food_process(), d).status, SolverStatus::Error);
}

TEST(ToyOptimize, FoodWindowFindsOptimum) {
  const auto d = VariableDomain::load(fixture("food/domain.json"));
  const auto run = toy_optimize(execopt::testing::food_process(), d);
  ASSERT_EQ(run.status, SolverStatus::Optimal);
  EXPECT_EQ(run.objective_value, 8090.0);
  EXPECT_EQ(run.variables, execopt::testing::food_optimum());
  const auto v = simulate(execopt::testing::food_process(), run.variables);
  EXPECT_TRUE(v.feasible);
  EXPECT_EQ(v.objective, 8090.0);
}

TEST(ToyOptimize, AgreesWithIndependentEnumeration) {
  std::mt19937_64 rng(7);
  int optimal = 0, infeasible = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto m = random_model(rng);
    VariableDomain d;
    for (std::size_t i = 0; i < m.bounds.size(); ++i) d.bounds["v" + std::to_string(i + 1)] = m.bounds[i];
    const auto want = oracle(m);
    for (bool parallel : {true, false}) {
      const auto got = toy_optimize(m.process, d, {12, 10'000'000, parallel});
      if (!want) {
        ASSERT_EQ(got.status, SolverStatus::Infeasible) << trial;
        continue;
      }
      ASSERT_EQ(got.status, SolverStatus::Optimal) << trial;
      ASSERT_EQ(*got.objective_value, want->first) << trial;
      std::vector<double> vec;
      for (std::size_t i = 0; i < m.bounds.size(); ++i) vec.push_back(got.variables.at("v" + std::to_string(i + 1)));
      ASSERT_EQ(vec, want->second) << trial;
      // Whatever the solver returns must pass the simulator.
      const auto v = simulate(m.process, got.variables);
      ASSERT_TRUE(validate(*got.objective_value, v, {}).passed);
    }
    want ? ++optimal : ++infeasible;
  }
  EXPECT_GT(optimal, 100);
  EXPECT_GT(infeasible, 10);
}

TEST(Fault, ParseAndDescribe) {
  for (const char* s : {"drop-constraint(2)", "flip-objective-sign", "perturb-objective(0.5)",
                        "report-status(infeasible)"}) {
    EXPECT_EQ(Fault::parse(s).describe(), s);
  }
  EXPECT_EQ(Fault::parse("drop-constraint(0)@3").heals_after, 3);
  EXPECT_FALSE(Fault::parse("flip-objective-sign@never").heals_after);
  EXPECT_THROW(Fault::parse("explode"), ConfigError);
  EXPECT_THROW(Fault::parse("drop-constraint"), ConfigError);
}

TEST(Fault, DriversApplyFaults) {
  auto d = box({{"a", {0, 3}}, {"b", {0, 3}}});
  auto drivers = faulty_optimize_variants(
      d, {},
      {{}, {Fault::parse("drop-constraint(0)")}, {Fault::parse("perturb-objective(0.5)")},
       {Fault::parse("flip-objective-sign")}, {Fault::parse("report-status(infeasible)")}});
  ASSERT_EQ(drivers.size(), 5u);
  OptimizerTask t;
  t.process = knapsack_process();
  EXPECT_EQ(drivers[0]->run(t).run.objective_value, 9.0);
  EXPECT_EQ(drivers[1]->run(t).run.objective_value, 21.0);
  EXPECT_EQ(drivers[2]->run(t).run.objective_value, 9.5);
  EXPECT_EQ(drivers[3]->run(t).run.objective_value, -9.0);
  const auto inf = drivers[4]->run(t).run;
  EXPECT_EQ(inf.status, SolverStatus::Infeasible);
  EXPECT_TRUE(inf.variables.empty());
}

TEST(Fault, HealsOnMatchingFeedbackOnly) {
  auto drivers = faulty_optimize_variants(box({{"a", {0, 3}}, {"b", {0, 3}}}), {},
                                          {{Fault::parse("drop-constraint(0)")}});
  OptimizerTask t;
  t.process = knapsack_process();
  t.feedback = Json{{"constraint_violations", Json::array({{{"constraint_index", 1}}})}};
  EXPECT_EQ(drivers[0]->run(t).run.objective_value, 21.0);
  t.feedback = Json{{"constraint_violations", Json::array({{{"constraint_index", 0}}})}};
  const auto healed = drivers[0]->run(t);
  EXPECT_EQ(healed.run.objective_value, 9.0);
  EXPECT_EQ(healed.fixes_applied, (std::vector<std::string>{"fixed drop-constraint(0)"}));
}

TEST(VariableDomain, JsonRoundTrip) {
  const auto d = VariableDomain::load(fixture("food/domain.json"));
  EXPECT_EQ(VariableDomain::from_json(d.to_json()).to_json().dump(), d.to_json().dump());
  EXPECT_THROW(VariableDomain::from_json(Json::parse(R"({"bounds": {"x": [3, 1]}})")), Error);
}
