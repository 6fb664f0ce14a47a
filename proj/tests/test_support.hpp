#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "execopt/decision_model.hpp"

namespace execopt::testing {

std::filesystem::path fixture(const std::string& rel);

// Food distribution model (candidate 5).
DecisionProcess food_process();
// The known optimal shipments, every route listed.
std::map<std::string, double> food_optimum();

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

// Two-item knapsack: maximize 3a + 4b s.t. 2a + 3b <= 6.
DecisionProcess knapsack_process();

// Parses a terse model document, filling the omitted schema fields with
// empty values.
DecisionProcess sparse_process(const std::string& doc);

}  // namespace execopt::testing
