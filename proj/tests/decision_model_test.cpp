#include <gtest/gtest.h>

#include "execopt/errors.hpp"
#include "execopt/hashing.hpp"
#include "test_support.hpp"

using namespace execopt;
using execopt::testing::fixture;

namespace {

const char* kEmpty = R"js({"problem_description": "", "decision_variables": [], "inputs": [],
  "exogenous_variables": [], "exogenous_uncertainties": [], "state_variables": [],
  "transition_function": "", "objective_function": {"direction": "minimize", "expression": "0",
  "description": ""}, "constraints": []})js";

}  // namespace

TEST(DecisionModel, ParsesFoodExtraction) {
  const DecisionProcess p = execopt::testing::food_process();
  ASSERT_EQ(p.decision_variables.size(), 1u);
  EXPECT_EQ(p.decision_variables[0].name, "x[i,j]");
  EXPECT_EQ(p.decision_variables[0].base_name(), "x");
  EXPECT_EQ(p.decision_variables[0].index_arity(), 2u);
  EXPECT_EQ(p.decision_variables[0].var_type, VarType::Continuous);
  EXPECT_EQ(p.inputs.size(), 3u);
  EXPECT_EQ(p.constraints.size(), 2u);
  EXPECT_EQ(p.objective_function.direction, Direction::Minimize);
  const auto* costs = p.find_input("transportation_costs");
  ASSERT_NE(costs, nullptr);
  EXPECT_EQ(costs->value.shape(), (std::vector<std::size_t>{6, 6}));
  EXPECT_FALSE(p.has_integer_structure());
}

TEST(DecisionModel, EmptyProcessIsValid) {
  const DecisionProcess p = parse_decision_process(kEmpty);
  EXPECT_TRUE(p.decision_variables.empty());
  const Json j = Json::parse(serialize_decision_process(p));
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"problem_description", "decision_variables", "inputs",
                                            "exogenous_variables", "exogenous_uncertainties",
                                            "state_variables", "transition_function",
                                            "objective_function", "constraints"}));
}

TEST(DecisionModel, UndeclaredSymbolIsNamed) {
  Json doc = Json::parse(kEmpty);
  doc["constraints"].push_back(Json{{"expression", "y >= 0"}, {"description", ""}});
  try {
    parse_decision_process(doc.dump());
    FAIL() << "expected UndeclaredSymbol";
  } catch (const UndeclaredSymbol& e) {
    EXPECT_EQ(e.symbol(), "y");
  }
}

TEST(DecisionModel, RejectsBadDocuments) {
  EXPECT_THROW(parse_decision_process("{not json"), MalformedDocument);
  Json doc = Json::parse(kEmpty);
  doc["surprise"] = 1;
  try {
    parse_decision_process(doc.dump());
    FAIL();
  } catch (const SchemaViolation& e) {
    EXPECT_NE(std::string(e.what()).find("surprise"), std::string::npos);
  }
  doc = Json::parse(kEmpty);
  doc["decision_variables"].push_back(Json{{"name", "z"}, {"type", "REAL"}, {"description", ""}});
  EXPECT_THROW(parse_decision_process(doc.dump()), SchemaViolation);
  doc = Json::parse(kEmpty);
  doc["inputs"].push_back(Json{{"name", "m"}, {"value", Json::parse("[[1,2],[3]]")}, {"units", ""}, {"description", ""}});
  EXPECT_THROW(parse_decision_process(doc.dump()), SchemaViolation);
  doc = Json::parse(kEmpty);
  doc["objective_function"]["direction"] = "minimise";
  EXPECT_THROW(parse_decision_process(doc.dump()), SchemaViolation);
}

TEST(DecisionModel, SerializationRoundTripIsByteStable) {
  for (int i = 1; i <= 5; ++i) {
    const std::string text =
        read_file(fixture("food/candidates/candidate_" + std::to_string(i) + ".json"));
    const DecisionProcess p = parse_decision_process(text);
    const std::string once = serialize_decision_process(p);
    EXPECT_EQ(parse_decision_process(once), p);
    EXPECT_EQ(serialize_decision_process(parse_decision_process(once)), once);
  }
}

TEST(DecisionModel, MatrixSerializesRowMajor) {
  const Json j = decision_process_to_json(execopt::testing::food_process());
  EXPECT_EQ(j["inputs"][2]["value"][1].dump(), "[27,0,23,37,39,29]");
}

TEST(DecisionModel, StatusOrderIsStrictTotal) {
  for (auto a : kAllStatuses) {
    EXPECT_FALSE(status_precedes(a, a));
    for (auto b : kAllStatuses) {
      if (a != b) EXPECT_NE(status_precedes(a, b), status_precedes(b, a));
      for (auto c : kAllStatuses) {
        if (status_precedes(a, b) && status_precedes(b, c)) EXPECT_TRUE(status_precedes(a, c));
      }
    }
  }
  EXPECT_TRUE(status_precedes(SolverStatus::Optimal, SolverStatus::TimeLimit));
  EXPECT_TRUE(status_precedes(SolverStatus::Unbounded, SolverStatus::Error));
}

TEST(DecisionModel, SolverRunJson) {
  SolverRun run;
  run.variant_name = "variant_2";
  run.variables = {{"x[3,6]", 361.0}};
  run.objective_value = 8090.00000015;
  run.status = SolverStatus::Optimal;
  run.solver_name = "CVXPY (ECOS)";
  run.solve_time = 0.0359;
  const Json j = solver_run_to_json(run);
  EXPECT_EQ(solver_run_from_json(j, "variant_2"), run);
  EXPECT_EQ(number_or_null(8090.0).dump(), "8090.0");

  Json bad = j;
  bad.erase("optimal_objective_value");
  bad["optimal_objective_value"] = nullptr;
  // null is allowed here; consensus demotes the run later
  EXPECT_FALSE(solver_run_from_json(bad, "v").objective_value.has_value());
  bad["optimal_objective_value"] = "8090";
  EXPECT_THROW(solver_run_from_json(bad, "v"), SchemaViolation);
}

TEST(DecisionModel, VariableKeys) {
  const long long idx[] = {3, 6};
  EXPECT_EQ(variable_key("x", idx), "x[3,6]");
  EXPECT_EQ(normalize_variable_key("x[3, 6]"), "x[3,6]");
}
